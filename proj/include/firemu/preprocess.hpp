#ifndef FIREMU_PREPROCESS_HPP
#define FIREMU_PREPROCESS_HPP

#include "firemu/grids.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>
#include <vector>

namespace firemu {

/// Fire-channel code for pixels that have not burned by the end of the horizon.
inline constexpr float kUnburnedCode = 1.5f;
/// Weather feature scaling: wind in px/interval and temperature in degrees C.
inline constexpr float kWindFeatureScale = 600.0f;
inline constexpr float kTemperatureFeatureScale = 40.0f;
inline constexpr int kWeatherFeatures = 3;

using WeatherFeatures = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FuelEncoding { scalar, onehot };

struct PixelIndex {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Model-ready bundle. terrain[0] and terrain[1] are the x/y slope channels;
/// the remaining terrain channels encode fuel.
struct FireSample {
  std::string id;
  std::vector<Raster> terrain;
  Raster initial_fire;
  Raster target_fire;
  WeatherFeatures weather_seq;  // horizon_intervals x kWeatherFeatures
  std::vector<WeatherRecord> weather_raw;
  int horizon_intervals = 0;
  float cell_size_m = 30.0f;
  float interval_minutes = 30.0f;
  FuelEncoding fuel_encoding = FuelEncoding::scalar;
  int num_classes = 4;

  Eigen::Index rows() const { return initial_fire.rows(); }
  Eigen::Index cols() const { return initial_fire.cols(); }
  void validate() const;
};

/// Group element R^rot_quarter_turns * F^flip_horizontal of the square's symmetry
/// group: the flip (if any) is applied first, then clockwise quarter turns.
struct DihedralTransform {
  int rot_quarter_turns = 0;
  bool flip_horizontal = false;

  static DihedralTransform from_index(int index);  // 0..7
  int index() const;
  DihedralTransform inverse() const;
  /// Element equivalent to applying `first`, then `second`.
  static DihedralTransform compose(const DihedralTransform& first, const DihedralTransform& second);
  friend bool operator==(const DihedralTransform&, const DihedralTransform&) = default;
};

struct TerrainGradients {
  Raster x;
  Raster y;
};

/// Sobel slope (rise per metre) with edge-replicate padding.
TerrainGradients elevation_to_gradients(const Grid2D& elevation);

/// Vector toward which the air moves, in raster axes (x east, y south).
Eigen::Vector2f wind_to_components(float speed_ms, float dir_deg);

struct UnitScale {
  float cell_size_m = 30.0f;
  float interval_minutes = 30.0f;

  UnitScale(float cell_size, float interval);
  float wind_px_per_interval(float speed_ms) const { return speed_ms * interval_minutes * 60.0f / cell_size_m; }
  float minutes_to_intervals(float minutes) const { return minutes / interval_minutes; }
  Eigen::Vector2f wind_vector(const WeatherRecord& r) const;
};

/// Arrival grid (minutes) converted to interval units; unburned stays +inf.
Raster arrival_in_intervals(const ArrivalGrid& arrival, float interval_minutes);

/// 0 when burned by t_start, (t - t_start)/n inside the horizon, kUnburnedCode otherwise.
Raster encode_arrival(const Raster& arrival_intervals, float t_start, int horizon);
/// Fire state at t_start: 0 where burned, kUnburnedCode elsewhere.
Raster initial_fire_channel(const Raster& arrival_intervals, float t_start);

/// Rows of (temperature, wx, wy) scaled to order one.
WeatherFeatures weather_features(const std::vector<WeatherRecord>& records, const UnitScale& scale);

std::vector<Raster> fuel_channels(const LandClassGrid& landclass, int num_classes, FuelEncoding encoding);

struct SampleWindow {
  int t_start = 0;
  int horizon = 1;
};

FireSample make_sample(const Scene& scene, const WeatherSeries& weather, const ArrivalGrid& arrival,
                       const SampleWindow& window, int num_classes = 4,
                       FuelEncoding encoding = FuelEncoding::scalar);

/// Burned pixels with at least one unburned 4-neighbour.
std::vector<PixelIndex> active_perimeter(const Raster& fire);

/// Pads every spatial channel to at least (rows, cols). The source is placed at
/// (offset_row, offset_col); padding is nonburnable, flat and unburned.
FireSample pad_sample(const FireSample& sample, Eigen::Index rows, Eigen::Index cols, Eigen::Index offset_row = 0,
                      Eigen::Index offset_col = 0);
FireSample crop_window(const FireSample& sample, Eigen::Index row0, Eigen::Index col0, Eigen::Index rows,
                       Eigen::Index cols);
FireSample crop_sample(const FireSample& sample, int size, std::mt19937_64& rng);

Raster transform_raster(const Raster& r, const DihedralTransform& t);
Eigen::Vector2f transform_vector(const Eigen::Vector2f& v, const DihedralTransform& t);
float transform_compass_deg(float dir_deg, const DihedralTransform& t);
FireSample apply_dihedral(const FireSample& sample, const DihedralTransform& t);

Scene transform_scene(const Scene& scene, const DihedralTransform& t);
WeatherSeries transform_weather(const WeatherSeries& weather, const DihedralTransform& t);

}  // namespace firemu

#endif  // FIREMU_PREPROCESS_HPP
