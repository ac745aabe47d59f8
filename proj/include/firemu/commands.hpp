#ifndef FIREMU_COMMANDS_HPP
#define FIREMU_COMMANDS_HPP

#include "firemu/dataset.hpp"
#include "firemu/emulator.hpp"
#include "firemu/ensemble.hpp"
#include "firemu/firesim.hpp"
#include "firemu/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace firemu {

struct GenerateOptions {
  std::uint64_t seed = 0;
  int count = 200;
  Eigen::Index rows = 128;
  Eigen::Index cols = 128;
  int intervals = 8;
  int num_classes = 4;
  float cell_size_m = 30.0f;
  double test_split = 0.2;
  std::filesystem::path out = "data";
};

/// Writes scenes, weather and ignitions plus manifest.txt under opts.out.
RunManifest cmd_generate(const GenerateOptions& opts, std::ostream& log);

struct SimulateReport {
  std::vector<std::string> ids;
  std::vector<double> seconds;
  std::vector<std::string> failures;
};

/// Arrival grid per sample; timing.csv beside the manifest.
SimulateReport cmd_simulate(const std::filesystem::path& manifest, const SimConfig& config, std::ostream& log);

struct TrainOptions {
  std::filesystem::path manifest;
  std::filesystem::path out = "model.femu";
  TrainConfig train;
  ModelConfig model;
};

TrainResult cmd_train(const TrainOptions& opts, std::ostream& log);

/// Writes prediction.asc, difference.asc and difference.ppm into out_dir.
Raster cmd_predict(const std::filesystem::path& model, const std::filesystem::path& manifest, const std::string& id,
                   const std::filesystem::path& out_dir, std::ostream& log);

struct EvaluateOptions {
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> model;  // persistence baseline when empty
  std::string split = "test";
  double tau = 1e-6;
  std::filesystem::path out;  // report directory; nothing written when empty
};

MetricsReport cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);

struct EnsembleOptions {
  std::filesystem::path model;
  std::filesystem::path manifest;
  std::string id;
  PerturbationSpec spec;
  double level = 0.5;
  std::filesystem::path out = "ensemble";
};

ProbabilityGrid cmd_ensemble(const EnsembleOptions& opts, std::ostream& log);

struct BenchOptions {
  std::filesystem::path model;  // random default-config weights when empty
  std::filesystem::path manifest;
  int repetitions = 5;
  int scenes = 0;  // 0 = every sample
  int horizon = 8;
  SimConfig sim;
};

struct BenchScene {
  std::string id;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  double sim_median_s = 0.0;
  double emu_median_s = 0.0;
};

struct BenchReport {
  std::vector<BenchScene> scenes;
  double sim_median_s = 0.0;
  double emu_median_s = 0.0;
  double ratio = 0.0;  // simulator / emulator
};

inline constexpr double kReferenceSpeedup = 4.0;

BenchReport cmd_bench(const BenchOptions& opts, std::ostream& log);
std::string format_bench_report(const BenchReport& report);

double median(std::vector<double> values);

}  // namespace firemu

#endif  // FIREMU_COMMANDS_HPP
