#include "firemu/emulator.hpp"

#include <cmath>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace firemu {

void ModelConfig::validate() const {
  if (depth < 1 || depth > 8) throw std::invalid_argument("model depth must be in [1, 8]");
  if (base_channels < 1 || latent_channels < 1) throw std::invalid_argument("channel counts must be positive");
  if (weather_dim < 1) throw std::invalid_argument("weather_dim must be positive");
  if (input_channels < 2) throw std::invalid_argument("input needs a fire channel and terrain");
  if (recurrent_convs < 1) throw std::invalid_argument("residual cell needs at least one convolution");
}

int ModelConfig::encoder_channels(int stage) const {
  if (stage == depth - 1) return latent_channels;
  return std::min(base_channels << stage, latent_channels);
}

int ModelConfig::decoder_channels(int stage) const {
  if (stage == depth - 1) return base_channels;
  return encoder_channels(depth - 2 - stage);
}

std::string encoder_name(int i) { return "enc_" + std::to_string(i); }
std::string decoder_name(int i) { return "dec_" + std::to_string(i); }
std::string residual_name(int i) { return "res_" + std::to_string(i); }

Model build_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model model{config, {}};
  auto& p = model.params;
  const Index k_down = kDownSpec.kernel;
  const Index k_cell = kCellSpec.kernel;
  const Index latent = config.latent_channels;
  const Index weather = config.weather_dim;

  Index in = config.input_channels;
  for (int i = 0; i < config.depth; ++i) {
    const Index out = config.encoder_channels(i);
    p.add(encoder_name(i), {out, in, k_down, k_down}, out);
    in = out;
  }
  p.add("cond_in", {weather, latent, 1, 1}, weather);
  p.add("cond_out", {latent, weather, 1, 1}, latent);
  for (int i = 0; i < config.recurrent_convs; ++i) p.add(residual_name(i), {latent, latent, k_cell, k_cell}, latent);
  in = latent;
  for (int i = 0; i < config.depth; ++i) {
    const Index out = config.decoder_channels(i);
    // Transposed layers store (c_in, c_out, k, k).
    p.add(decoder_name(i), {in, out, k_down, k_down}, out);
    in = out;
  }
  p.add("head", {1, in, 1, 1}, 1);

  std::mt19937_64 rng(seed);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (const auto& s : p.segments()) {
    const bool transposed = s.name.starts_with("dec_");
    const Index c_in = transposed ? s.weight_shape.n : s.weight_shape.c;
    const double stride_sq = transposed ? static_cast<double>(kDownSpec.stride * kDownSpec.stride) : 1.0;
    const double fan_in = static_cast<double>(c_in * s.weight_shape.h * s.weight_shape.w) / stride_sq;
    const auto stddev = static_cast<float>(std::sqrt(2.0 / fan_in));
    auto w = p.weights(s.name);
    for (Index i = 0; i < w.size(); ++i) w[i] = stddev * normal(rng);
  }
  return model;
}

Index residual_parameter_count(const Model& model) {
  Index total = 0;
  for (int i = 0; i < model.config.recurrent_convs; ++i) total += model.params.segment(residual_name(i)).size();
  return total;
}

std::string describe_parameters(const Model& model) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "segment" << std::setw(20) << "shape" << std::right << std::setw(10)
      << "count" << '\n';
  for (const auto& s : model.params.segments()) {
    out << std::left << std::setw(10) << s.name << std::setw(20) << to_string(s.weight_shape) << std::right
        << std::setw(10) << s.size() << '\n';
  }
  out << "residual block: " << residual_parameter_count(model) << " (published reference "
      << kReferenceResidualParameters << ")\n";
  out << "total: " << model.params.total_count() << " (published reference " << kReferenceTotalParameters
      << ", budget " << 2 * kReferenceTotalParameters << ")\n";
  return out.str();
}

double loss_value(const Raster& pred, const Raster& target, const Raster& initial, double tau) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || initial.rows() != target.rows() ||
      initial.cols() != target.cols()) {
    throw std::invalid_argument("loss: shape mismatch");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const double n = static_cast<double>(target.size());
  const double mse_p = (pred - target).cast<double>().square().sum() / n;
  const double mse_o = (initial - target).cast<double>().square().sum() / n;
  return std::log10(mse_p + tau) - std::log10(mse_o + tau);
}

Raster predict(const Model& model, const FireSample& sample) {
  const Index d = model.config.divisor();
  const Index rows = ((sample.rows() + d - 1) / d) * d;
  const Index cols = ((sample.cols() + d - 1) / d) * d;
  const bool padded = rows != sample.rows() || cols != sample.cols();
  std::optional<FireSample> padded_sample;
  if (padded) padded_sample = pad_sample(sample, rows, cols);
  const FireSample& input = padded ? *padded_sample : sample;
  Tape<float> tape(false);
  const Var out = forward(tape, model.params, model.config, sample_input<float>(input), input.weather_seq);
  Raster pred = tensor_raster(tape.value(out));
  if (padded) return pred.block(0, 0, sample.rows(), sample.cols());
  return pred;
}

Predictor model_predictor(const Model& model) {
  return [&model](const FireSample& s) { return predict(model, s); };
}

Raster persistence_prediction(const FireSample& sample) { return sample.initial_fire; }

}  // namespace firemu
