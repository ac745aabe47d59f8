#ifndef FIREMU_EMULATOR_HPP
#define FIREMU_EMULATOR_HPP

#include "firemu/adam.hpp"
#include "firemu/autodiff.hpp"
#include "firemu/param_store.hpp"
#include "firemu/preprocess.hpp"
#include "firemu/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace firemu {

/// Layout of the recurrent encoder/decoder. Strided stages use k4 s2 p1, the
/// residual cell uses k3 s1 p1, conditioning and head are 1x1.
struct ModelConfig {
  int depth = 3;
  int base_channels = 16;
  int latent_channels = 32;
  int weather_dim = kWeatherFeatures;
  int input_channels = 4;
  int recurrent_convs = 2;

  void validate() const;
  Index divisor() const { return Index{1} << depth; }
  /// Output channels of encoder stage i; the last stage is latent_channels wide.
  int encoder_channels(int stage) const;
  /// Output channels of decoder stage i (mirrors the encoder).
  int decoder_channels(int stage) const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr ConvSpec kDownSpec{4, 2, 1};
inline constexpr ConvSpec kCellSpec{3, 1, 1};
inline constexpr ConvSpec kPointSpec{1, 1, 0};

using ModelParams = ParamStore<float>;

struct Model {
  ModelConfig config;
  ModelParams params;
};

/// He-scaled normal weights, zero biases; deterministic in seed.
Model build_model(const ModelConfig& config, std::uint64_t seed);

std::string encoder_name(int i);
std::string decoder_name(int i);
std::string residual_name(int i);

/// Human-readable per-segment parameter table with residual-block and total sums.
std::string describe_parameters(const Model& model);
Index residual_parameter_count(const Model& model);

/// Published totals of the reference architecture, reported beside ours.
inline constexpr Index kReferenceTotalParameters = 106532;
inline constexpr Index kReferenceResidualParameters = 21248;

/// (1, C, H, W) model input: the fire channel followed by the terrain channels.
template <typename Scalar>
Tensor<Scalar> sample_input(const FireSample& sample) {
  const Index rows = sample.rows();
  const Index cols = sample.cols();
  const Index channels = 1 + static_cast<Index>(sample.terrain.size());
  Tensor<Scalar> t({1, channels, rows, cols});
  auto put = [&](Index c, const Raster& r) {
    t.image(0).row(c) = Eigen::Map<const Eigen::RowVectorXf>(r.data(), r.size()).template cast<Scalar>();
  };
  put(0, sample.initial_fire);
  for (std::size_t k = 0; k < sample.terrain.size(); ++k) put(static_cast<Index>(k) + 1, sample.terrain[k]);
  return t;
}

template <typename Scalar>
Tensor<Scalar> raster_tensor(const Raster& r) {
  Tensor<Scalar> t({1, 1, r.rows(), r.cols()});
  t.image(0).row(0) = Eigen::Map<const Eigen::RowVectorXf>(r.data(), r.size()).template cast<Scalar>();
  return t;
}

template <typename Scalar>
Raster tensor_raster(const Tensor<Scalar>& t) {
  const auto& s = t.shape();
  if (s.n != 1 || s.c != 1) throw std::invalid_argument("expected a single-channel tensor");
  Raster r(s.h, s.w);
  Eigen::Map<Eigen::RowVectorXf>(r.data(), r.size()) = t.image(0).row(0).template cast<float>();
  return r;
}

// Differentiable building blocks. Templated on scalar so the same graph runs in
// 32-bit for training and in 64-bit for gradient verification.

template <typename Scalar>
Var encode(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config, Var input) {
  const auto& s = tape.value(input).shape();
  if (s.h % config.divisor() != 0 || s.w % config.divisor() != 0) {
    throw std::invalid_argument("input " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                                " is not divisible by " + std::to_string(config.divisor()));
  }
  Var x = input;
  for (int i = 0; i < config.depth; ++i) {
    x = ad::relu(tape, ad::conv2d(tape, x, tape.layer(params, encoder_name(i)), kDownSpec));
  }
  return x;
}

/// Projects latent terrain to one channel per weather scalar, scales each by its
/// scalar, and projects back. `weather` has shape (N, K, 1, 1).
template <typename Scalar>
Var condition(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config, Var latent,
              Var weather) {
  if (tape.value(weather).shape().c != config.weather_dim) {
    throw std::invalid_argument("weather vector has " + std::to_string(tape.value(weather).shape().c) +
                                " entries, model expects " + std::to_string(config.weather_dim));
  }
  Var k = ad::conv2d(tape, latent, tape.layer(params, "cond_in"), kPointSpec);
  k = ad::scale_channels(tape, k, weather);
  return ad::conv2d(tape, k, tape.layer(params, "cond_out"), kPointSpec);
}

/// state' = state + F(state + conditioned), F a stack of k3 convolutions with
/// relu between them.
template <typename Scalar>
Var recurrent_step(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config, Var state,
                   Var conditioned) {
  Var h = ad::add(tape, state, conditioned);
  for (int i = 0; i < config.recurrent_convs; ++i) {
    h = ad::conv2d(tape, h, tape.layer(params, residual_name(i)), kCellSpec);
    if (i + 1 < config.recurrent_convs) h = ad::relu(tape, h);
  }
  return ad::add(tape, state, h);
}

template <typename Scalar>
Var decode(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config, Var state) {
  Var x = state;
  for (int i = 0; i < config.depth; ++i) {
    x = ad::relu(tape, ad::conv2d_transpose(tape, x, tape.layer(params, decoder_name(i)), kDownSpec));
  }
  return ad::conv2d(tape, x, tape.layer(params, "head"), kPointSpec);
}

/// encode -> one recurrent step per weather row (shared weights) -> decode.
template <typename Scalar>
Var forward(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config,
            const Tensor<Scalar>& input, const WeatherFeatures& weather) {
  if (input.shape().c != config.input_channels) {
    throw std::invalid_argument("input has " + std::to_string(input.shape().c) + " channels, model expects " +
                                std::to_string(config.input_channels));
  }
  const Var latent = encode(tape, params, config, tape.constant(input));
  Var state = latent;
  for (Index step = 0; step < weather.rows(); ++step) {
    Tensor<Scalar> w({1, weather.cols(), 1, 1});
    w.values() = weather.row(step).transpose().template cast<Scalar>();
    const Var cond = condition(tape, params, config, latent, tape.constant(std::move(w)));
    state = recurrent_step(tape, params, config, state, cond);
  }
  return decode(tape, params, config, state);
}

/// log10((MSE_p + tau) / (MSE_o + tau)): negative when the prediction beats persistence.
template <typename Scalar>
Var loss_fn(Tape<Scalar>& tape, Var pred, Var target, Var initial, Scalar tau) {
  if (!(tau > Scalar(0))) throw std::invalid_argument("tau must be positive");
  const Var mse_p = ad::mse(tape, pred, target);
  const Var mse_o = ad::mse(tape, initial, target);
  return ad::sub(tape, ad::log10(tape, ad::add_scalar(tape, mse_p, tau)),
                 ad::log10(tape, ad::add_scalar(tape, mse_o, tau)));
}

/// Non-differentiable loss on rasters, same arithmetic as loss_fn.
double loss_value(const Raster& pred, const Raster& target, const Raster& initial, double tau);

/// Sample loss as a tape computation (used for training and gradient checks).
template <typename Scalar>
Var sample_loss(Tape<Scalar>& tape, const ParamStore<Scalar>& params, const ModelConfig& config,
                const FireSample& sample, Scalar tau) {
  const Var pred = forward(tape, params, config, sample_input<Scalar>(sample), sample.weather_seq);
  return loss_fn(tape, pred, tape.constant(raster_tensor<Scalar>(sample.target_fire)),
                 tape.constant(raster_tensor<Scalar>(sample.initial_fire)), tau);
}

/// Predicted fire channel, same shape as the sample. Sizes that are not
/// multiples of 2^depth are padded with nonburnable cells and cropped back.
Raster predict(const Model& model, const FireSample& sample);

using Predictor = std::function<Raster(const FireSample&)>;
Predictor model_predictor(const Model& model);
Raster persistence_prediction(const FireSample& sample);

// Training.

struct TrainConfig {
  int epochs = 400;
  int batch_size = 16;
  double test_split = 0.2;
  int crop_size = 256;  // 0 disables cropping
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  double tau = 1e-6;
  std::uint64_t seed = 0;
  bool augment = true;
  bool deterministic = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled split by sample; at least one sample lands on each side.
DatasetSplit split_dataset(std::size_t count, double test_split, std::uint64_t seed);

/// One optimiser over one model. step() averages per-sample gradients over the batch.
class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);

  /// Returns the mean batch loss before the update. Throws on a non-finite loss.
  double step(const std::vector<FireSample>& batch);
  Index steps_taken() const { return adam_.step; }

 private:
  Model* model_;
  TrainConfig config_;
  AdamState<float> adam_;
};

struct TrainResult {
  Model model;
  TrainHistory history;
  DatasetSplit split;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const std::vector<FireSample>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch = {});
/// Continues training an existing model on a fixed split.
TrainHistory train_on_split(Model& model, const std::vector<FireSample>& dataset, const DatasetSplit& split,
                            const TrainConfig& train_config, const EpochCallback& on_epoch = {});

TrainConfig read_train_config(const std::filesystem::path& path, TrainConfig base = {});
void write_train_config(const TrainConfig& config, const std::filesystem::path& path);
void write_history(const TrainHistory& history, const std::filesystem::path& path);

// Model file: "FEMU", u32 version, u32 header length, header text, then
// little-endian float32 parameters in segment order.

inline constexpr std::uint32_t kModelFileVersion = 1;

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
std::string model_header_text(const Model& model);

}  // namespace firemu

#endif  // FIREMU_EMULATOR_HPP
