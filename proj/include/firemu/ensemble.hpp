#ifndef FIREMU_ENSEMBLE_HPP
#define FIREMU_ENSEMBLE_HPP

#include "firemu/emulator.hpp"
#include "firemu/grids.hpp"
#include "firemu/metrics.hpp"
#include "firemu/preprocess.hpp"

#include <cstdint>
#include <filesystem>

namespace firemu {

struct PerturbationSpec {
  float sigma_speed = 1.0f;  // m/s
  float sigma_dir = 15.0f;   // degrees
  float sigma_temp = 2.0f;   // degrees C
  int n_members = 20;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-pixel fraction of members that burn the pixel.
struct ProbabilityGrid {
  Raster prob;

  Eigen::Index rows() const { return prob.rows(); }
  Eigen::Index cols() const { return prob.cols(); }
  void validate() const;
};

/// I.i.d. Gaussian noise per record and channel; deterministic in (seed, member).
WeatherSeries perturb_weather(const WeatherSeries& series, const PerturbationSpec& spec, int member);

/// Replaces the sample's weather with a perturbed copy and re-derives its features.
FireSample perturb_sample(const FireSample& sample, const PerturbationSpec& spec, int member);

ProbabilityGrid ensemble_forecast(const Predictor& predictor, const FireSample& sample, const PerturbationSpec& spec);
ProbabilityGrid ensemble_forecast(const Model& model, const FireSample& sample, const PerturbationSpec& spec);

/// Pixels with prob >= level. Throws when level is outside [0, 1].
BurnMask exceedance_mask(const ProbabilityGrid& grid, double level);

void write_probability_grid(const ProbabilityGrid& grid, float cell_size_m, const std::filesystem::path& path);
ProbabilityGrid read_probability_grid(const std::filesystem::path& path);

}  // namespace firemu

#endif  // FIREMU_ENSEMBLE_HPP
