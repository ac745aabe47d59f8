#ifndef FIREMU_GRIDS_HPP
#define FIREMU_GRIDS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace firemu {

/// Row-major float raster. Row 0 is the northernmost row; x = column (east),
/// y = row (south).
using Raster = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ClassRaster = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr float kDefaultNodata = -9999.0f;
inline constexpr float kUnburned = std::numeric_limits<float>::infinity();

struct Grid2D {
  Raster values;
  float cell_size_m = 30.0f;
  float nodata = kDefaultNodata;

  Grid2D() = default;
  Grid2D(Eigen::Index rows, Eigen::Index cols, float fill = 0.0f, float cell_size = 30.0f);
  explicit Grid2D(Raster v, float cell_size = 30.0f, float nodata_value = kDefaultNodata);

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  bool is_nodata(Eigen::Index r, Eigen::Index c) const { return values(r, c) == nodata; }
  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// Class 0 is nonburnable.
struct LandClassGrid {
  ClassRaster classes;

  Eigen::Index rows() const { return classes.rows(); }
  Eigen::Index cols() const { return classes.cols(); }
};

struct WeatherRecord {
  float temperature_c = 20.0f;
  float wind_speed_ms = 0.0f;
  float wind_dir_deg = 0.0f;  // meteorological: direction the wind blows from
};

struct WeatherSeries {
  float interval_minutes = 30.0f;
  std::vector<WeatherRecord> records;

  std::size_t size() const { return records.size(); }
  float horizon_minutes() const { return interval_minutes * static_cast<float>(records.size()); }
  void validate() const;
};

struct Scene {
  Grid2D elevation;
  LandClassGrid landclass;

  Eigen::Index rows() const { return elevation.rows(); }
  Eigen::Index cols() const { return elevation.cols(); }
  float cell_size_m() const { return elevation.cell_size_m; }
  void validate() const;
};

/// Arrival time in minutes since scenario start; kUnburned (+inf) marks cells
/// the fire never reaches.
struct ArrivalGrid {
  Raster arrival;
  float cell_size_m = 30.0f;

  Eigen::Index rows() const { return arrival.rows(); }
  Eigen::Index cols() const { return arrival.cols(); }
  bool burned(Eigen::Index r, Eigen::Index c) const { return std::isfinite(arrival(r, c)); }
};

Grid2D read_ascii_grid(const std::filesystem::path& path);
void write_ascii_grid(const Grid2D& grid, const std::filesystem::path& path);

LandClassGrid read_landclass_grid(const std::filesystem::path& path);
void write_landclass_grid(const LandClassGrid& grid, float cell_size_m, const std::filesystem::path& path);

/// Unburned cells are written as NODATA and read back as +inf.
ArrivalGrid read_arrival_grid(const std::filesystem::path& path);
void write_arrival_grid(const ArrivalGrid& grid, const std::filesystem::path& path);

WeatherSeries read_weather_csv(const std::filesystem::path& path);
void write_weather_csv(const WeatherSeries& series, const std::filesystem::path& path);

/// 8-bit binary PGM. Values are mapped linearly from [lo, hi] to [0, 255].
void write_pgm(const Raster& values, float lo, float hi, const std::filesystem::path& path);
/// 8-bit binary PPM with a purple/white/orange diverging palette centred on 0.
void write_diverging_ppm(const Raster& values, float magnitude, const std::filesystem::path& path);

}  // namespace firemu

#endif  // FIREMU_GRIDS_HPP
