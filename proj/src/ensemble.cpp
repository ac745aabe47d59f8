#include "firemu/ensemble.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace firemu {

void PerturbationSpec::validate() const {
  if (!(sigma_speed >= 0.0f) || !(sigma_dir >= 0.0f) || !(sigma_temp >= 0.0f)) {
    throw std::invalid_argument("perturbation sigmas must be non-negative");
  }
  if (n_members < 1) throw std::invalid_argument("ensemble needs at least one member");
}

void ProbabilityGrid::validate() const {
  if (!((prob >= 0.0f) && (prob <= 1.0f)).all()) throw std::invalid_argument("probabilities outside [0, 1]");
}

WeatherSeries perturb_weather(const WeatherSeries& series, const PerturbationSpec& spec, int member) {
  spec.validate();
  if (member < 0) throw std::invalid_argument("negative member index");
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(member)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  WeatherSeries out = series;
  for (auto& r : out.records) {
    const float dt = normal(rng);
    const float ds = normal(rng);
    const float dd = normal(rng);
    r.temperature_c += spec.sigma_temp * dt;
    r.wind_speed_ms = std::max(0.0f, r.wind_speed_ms + spec.sigma_speed * ds);
    float dir = std::fmod(r.wind_dir_deg + spec.sigma_dir * dd, 360.0f);
    if (dir < 0.0f) dir += 360.0f;
    if (dir >= 360.0f) dir = 0.0f;
    r.wind_dir_deg = dir;
  }
  return out;
}

FireSample perturb_sample(const FireSample& sample, const PerturbationSpec& spec, int member) {
  WeatherSeries series;
  series.interval_minutes = sample.interval_minutes;
  series.records = sample.weather_raw;
  FireSample out = sample;
  out.weather_raw = perturb_weather(series, spec, member).records;
  out.weather_seq = weather_features(out.weather_raw, UnitScale{sample.cell_size_m, sample.interval_minutes});
  return out;
}

ProbabilityGrid ensemble_forecast(const Predictor& predictor, const FireSample& sample, const PerturbationSpec& spec) {
  spec.validate();
  sample.validate();
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> votes =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(sample.rows(), sample.cols());
  for (int m = 0; m < spec.n_members; ++m) {
    Raster pred;
    try {
      pred = predictor(perturb_sample(sample, spec, m));
    } catch (const std::exception& e) {
      throw std::runtime_error("ensemble member " + std::to_string(m) + ": " + e.what());
    }
    votes += burned_mask(pred).burned.cast<int>();
  }
  return {votes.cast<float>() / static_cast<float>(spec.n_members)};
}

ProbabilityGrid ensemble_forecast(const Model& model, const FireSample& sample, const PerturbationSpec& spec) {
  return ensemble_forecast(model_predictor(model), sample, spec);
}

BurnMask exceedance_mask(const ProbabilityGrid& grid, double level) {
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("exceedance level must be in [0, 1]");
  return {grid.prob.cast<double>() >= level};
}

void write_probability_grid(const ProbabilityGrid& grid, float cell_size_m, const std::filesystem::path& path) {
  Grid2D g;
  g.values = grid.prob;
  g.cell_size_m = cell_size_m;
  write_ascii_grid(g, path);
}

ProbabilityGrid read_probability_grid(const std::filesystem::path& path) {
  ProbabilityGrid grid{read_ascii_grid(path).values};
  grid.validate();
  return grid;
}

}  // namespace firemu
