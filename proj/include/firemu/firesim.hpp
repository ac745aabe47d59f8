#ifndef FIREMU_FIRESIM_HPP
#define FIREMU_FIRESIM_HPP

#include "firemu/grids.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace firemu {

/// Base rate of spread per land class, in pixels per interval. Class 0 is
/// nonburnable and always 0.
struct FuelTable {
  std::vector<float> base_ros{0.0f, 2.0f, 4.0f, 8.0f};

  int num_classes() const { return static_cast<int>(base_ros.size()); }
  void validate() const;
};

struct RosParams {
  float k_wind = 0.002f;   // interval / pixel
  float k_slope = 3.0f;
  float k_temp = 0.01f;    // per degree C
  float t_ref = 20.0f;     // degrees C

  void validate() const;
};

struct Ignition {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  float time = 0.0f;  // intervals
};

struct IgnitionSpec {
  std::vector<Ignition> points;
};

struct SimConfig {
  RosParams ros;
  FuelTable fuel;
};

/// Speed in pixels per interval along unit direction `u` (raster axes).
/// `wind` is in px/interval, `slope` is rise per run.
float rate_of_spread(int fuel_class, const Eigen::Vector2f& u, const Eigen::Vector2f& wind, const Eigen::Vector2f& slope,
                     float temperature_c, const RosParams& params, const FuelTable& table);

struct SimStats {
  std::size_t skipped_ignitions = 0;
  std::size_t settled = 0;
};

/// Time-dependent anisotropic shortest-path arrival over a 16-neighbour stencil.
/// Edge cost departs with the weather record of the departure interval. Cells
/// not reached within the weather horizon stay unburned.
ArrivalGrid simulate_arrival(const Scene& scene, const WeatherSeries& weather, const IgnitionSpec& ignition,
                             const RosParams& params, const FuelTable& table, SimStats* stats = nullptr);

/// Travel time (intervals) of one stencil edge, or +inf if it is blocked.
/// Exposed so the shortest-path labelling can be checked independently.
class SpreadModel {
 public:
  SpreadModel(const Scene& scene, const WeatherSeries& weather, const RosParams& params, const FuelTable& table);

  struct Offset {
    int dr;
    int dc;
  };
  static const std::vector<Offset>& stencil();

  double edge_time(Eigen::Index row, Eigen::Index col, std::size_t dir, double depart) const;
  int horizon() const { return static_cast<int>(wind_.size()); }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool burnable(Eigen::Index r, Eigen::Index c) const;

 private:
  Eigen::Index rows_, cols_;
  const LandClassGrid* landclass_;
  Raster grad_x_, grad_y_;
  std::vector<Eigen::Vector2f> wind_;
  std::vector<float> temperature_;
  RosParams params_;
  FuelTable table_;
};

Scene generate_scene(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols, int num_classes = 4,
                     float cell_size_m = 30.0f);
WeatherSeries generate_weather(std::uint64_t seed, int n_intervals);
/// A burnable pixel near the centre of the scene, chosen deterministically from the seed.
IgnitionSpec generate_ignition(std::uint64_t seed, const Scene& scene);

IgnitionSpec read_ignition(const std::filesystem::path& path);
void write_ignition(const IgnitionSpec& spec, const std::filesystem::path& path);

/// Flat key=value file: k_wind, k_slope, k_temp, t_ref, fuel_<id>.
SimConfig read_sim_config(const std::filesystem::path& path);
void write_sim_config(const SimConfig& config, const std::filesystem::path& path);

}  // namespace firemu

#endif  // FIREMU_FIRESIM_HPP
