#include "firemu/emulator.hpp"
#include "firemu/keyvalue.hpp"
#include "firemu/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace firemu {

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (!(test_split > 0.0 && test_split < 1.0)) throw std::invalid_argument("test_split must be in (0, 1)");
  if (crop_size < 0) throw std::invalid_argument("crop size must be non-negative");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(lr >= 0.0f)) throw std::invalid_argument("learning rate must be non-negative");
}

DatasetSplit split_dataset(std::size_t count, double test_split, std::uint64_t seed) {
  if (count < 2) throw std::invalid_argument("need at least two samples to split");
  if (!(test_split > 0.0 && test_split < 1.0)) throw std::invalid_argument("test_split must be in (0, 1)");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = static_cast<std::size_t>(std::lround(test_split * static_cast<double>(count)));
  n_test = std::clamp<std::size_t>(n_test, 1, count - 1);
  DatasetSplit split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Trainer::Trainer(Model& model, const TrainConfig& config)
    : model_(&model), config_(config), adam_(model.params.total_count(), config.lr) {
  config_.validate();
  adam_.beta1 = config.beta1;
  adam_.beta2 = config.beta2;
  adam_.epsilon = config.epsilon;
}

double Trainer::step(const std::vector<FireSample>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  auto& params = model_->params;
  Eigen::VectorXf grad = Eigen::VectorXf::Zero(params.total_count());
  double total = 0.0;
  const auto tau = static_cast<float>(config_.tau);
  for (const auto& sample : batch) {
    Tape<float> tape;
    const Var loss = sample_loss(tape, params, model_->config, sample, tau);
    const float value = tape.item(loss);
    if (!std::isfinite(value)) {
      throw std::runtime_error("training diverged: non-finite loss at optimiser step " +
                               std::to_string(adam_.step + 1) + " on sample '" + sample.id + "'");
    }
    tape.backward(loss);
    grad += tape.parameter_gradient(params);
    total += value;
  }
  grad /= static_cast<float>(batch.size());
  if (!grad.allFinite()) {
    throw std::runtime_error("training diverged: non-finite gradient at optimiser step " +
                             std::to_string(adam_.step + 1));
  }
  adam_step(params.values(), grad, adam_);
  return total / static_cast<double>(batch.size());
}

namespace {

double mean_loss(const Model& model, const std::vector<FireSample>& dataset, const std::vector<std::size_t>& ids,
                 double tau) {
  if (ids.empty()) return 0.0;
  double total = 0.0;
  for (const auto i : ids) {
    const auto& s = dataset[i];
    total += loss_value(predict(model, s), s.target_fire, s.initial_fire, tau);
  }
  return total / static_cast<double>(ids.size());
}

}  // namespace

TrainHistory train_on_split(Model& model, const std::vector<FireSample>& dataset, const DatasetSplit& split,
                            const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  for (const auto i : split.train) {
    if (i >= dataset.size()) throw std::out_of_range("split refers to a missing sample");
    dataset[i].validate();
  }

  // Crops are centred on the active perimeter, so fires without one cannot train.
  std::vector<std::size_t> pool;
  for (const auto i : split.train) {
    if (config.crop_size == 0 || !active_perimeter(dataset[i].initial_fire).empty()) {
      pool.push_back(i);
    } else {
      std::cerr << "warning: sample '" << dataset[i].id << "' has no active perimeter; excluded from training\n";
    }
  }
  if (pool.empty()) throw std::invalid_argument("no trainable samples");

  Trainer trainer(model, config);
  std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_int_distribution<int> element(0, 7);
  TrainHistory history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(pool.begin(), pool.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < pool.size(); b += static_cast<std::size_t>(config.batch_size)) {
      std::vector<FireSample> batch;
      const auto end = std::min(pool.size(), b + static_cast<std::size_t>(config.batch_size));
      for (std::size_t j = b; j < end; ++j) {
        FireSample s = config.crop_size > 0 ? crop_sample(dataset[pool[j]], config.crop_size, rng) : dataset[pool[j]];
        if (config.augment) {
          const auto t = DihedralTransform::from_index(element(rng));
          if (s.rows() == s.cols() || t.rot_quarter_turns % 2 == 0) s = apply_dihedral(s, t);
        }
        batch.push_back(std::move(s));
      }
      epoch_loss += trainer.step(batch);
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(batches);
    rec.val_loss = mean_loss(model, dataset, split.test, config.tau);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

TrainResult train(const std::vector<FireSample>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  train_config.validate();
  TrainResult result{build_model(model_config, train_config.seed), {},
                     split_dataset(dataset.size(), train_config.test_split, train_config.seed)};
  result.history = train_on_split(result.model, dataset, result.split, train_config, on_epoch);
  return result;
}

TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base) {
  const auto blocks = read_key_value_file(path);
  const auto& kv = blocks.front();
  base.epochs = static_cast<int>(kv.get_int_or("epochs", base.epochs));
  base.batch_size = static_cast<int>(kv.get_int_or("batch_size", base.batch_size));
  base.test_split = kv.get_double_or("test_split", base.test_split);
  base.crop_size = static_cast<int>(kv.get_int_or("crop_size", base.crop_size));
  base.lr = static_cast<float>(kv.get_double_or("lr", base.lr));
  base.beta1 = static_cast<float>(kv.get_double_or("beta1", base.beta1));
  base.beta2 = static_cast<float>(kv.get_double_or("beta2", base.beta2));
  base.epsilon = static_cast<float>(kv.get_double_or("epsilon", base.epsilon));
  base.tau = kv.get_double_or("tau", base.tau);
  base.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", static_cast<long long>(base.seed)));
  base.augment = kv.get_bool_or("augment", base.augment);
  base.deterministic = kv.get_bool_or("deterministic", base.deterministic);
  base.validate();
  return base;
}

void write_train_config(const TrainConfig& c, const std::filesystem::path& path) {
  KeyValueBlock kv;
  kv.set("epochs", std::to_string(c.epochs));
  kv.set("batch_size", std::to_string(c.batch_size));
  kv.set("test_split", text::format_double(c.test_split));
  kv.set("crop_size", std::to_string(c.crop_size));
  kv.set("lr", text::format_float(c.lr));
  kv.set("beta1", text::format_float(c.beta1));
  kv.set("beta2", text::format_float(c.beta2));
  kv.set("epsilon", text::format_float(c.epsilon));
  kv.set("tau", text::format_double(c.tau));
  kv.set("seed", std::to_string(c.seed));
  kv.set("augment", c.augment ? "true" : "false");
  kv.set("deterministic", c.deterministic ? "true" : "false");
  write_text_file(path, format_key_value({kv}));
}

void write_history(const TrainHistory& history, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,seconds\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << text::format_double(e.train_loss) << ',' << text::format_double(e.val_loss) << ','
        << text::format_double(e.seconds) << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace firemu
