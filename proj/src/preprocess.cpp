#include "firemu/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace firemu {

namespace {

template <typename Array>
Array flip_columns(const Array& a) {
  return a.rowwise().reverse();
}

// One clockwise quarter turn: new(r, c) = old(rows - 1 - c, r).
template <typename Array>
Array rotate_clockwise(const Array& a) {
  Array t = a.transpose();
  return t.rowwise().reverse();
}

template <typename Array>
Array transform_array(const Array& a, const DihedralTransform& t) {
  Array out = t.flip_horizontal ? flip_columns(a) : a;
  for (int i = 0; i < t.rot_quarter_turns; ++i) out = rotate_clockwise(out);
  return out;
}

int wrap_turns(int k) { return ((k % 4) + 4) % 4; }

}  // namespace

void FireSample::validate() const {
  const auto r = rows();
  const auto c = cols();
  const auto same = [&](const Raster& x) { return x.rows() == r && x.cols() == c; };
  if (terrain.size() < 3) throw std::invalid_argument("sample needs slope and fuel channels");
  if (!std::all_of(terrain.begin(), terrain.end(), same) || !same(target_fire)) {
    throw std::invalid_argument("sample spatial channels disagree in shape");
  }
  if (weather_seq.rows() != horizon_intervals || weather_seq.cols() != kWeatherFeatures) {
    throw std::invalid_argument("weather sequence length does not match horizon");
  }
}

DihedralTransform DihedralTransform::from_index(int index) {
  if (index < 0 || index > 7) throw std::invalid_argument("dihedral index must be in 0..7");
  return {index % 4, index >= 4};
}

int DihedralTransform::index() const { return wrap_turns(rot_quarter_turns) + (flip_horizontal ? 4 : 0); }

DihedralTransform DihedralTransform::inverse() const {
  // Reflections are involutions; rotations invert by turning back.
  if (flip_horizontal) return *this;
  return {wrap_turns(-rot_quarter_turns), false};
}

DihedralTransform DihedralTransform::compose(const DihedralTransform& first, const DihedralTransform& second) {
  // R^a F^f R^b F^g = R^(a + (f ? -b : b)) F^(f xor g), using F R F = R^-1.
  const int b = second.flip_horizontal ? -first.rot_quarter_turns : first.rot_quarter_turns;
  return {wrap_turns(second.rot_quarter_turns + b), first.flip_horizontal != second.flip_horizontal};
}

TerrainGradients elevation_to_gradients(const Grid2D& elevation) {
  const auto rows = elevation.rows();
  const auto cols = elevation.cols();
  if (rows < 3 || cols < 3) throw std::invalid_argument("gradient needs a grid of at least 3x3");
  if (!(elevation.cell_size_m > 0.0f)) throw std::invalid_argument("zero cell size");
  const auto& e = elevation.values;
  const auto at = [&](Eigen::Index r, Eigen::Index c) {
    return e(std::clamp<Eigen::Index>(r, 0, rows - 1), std::clamp<Eigen::Index>(c, 0, cols - 1));
  };
  const float norm = 1.0f / (8.0f * elevation.cell_size_m);
  TerrainGradients g{Raster(rows, cols), Raster(rows, cols)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const float gx = (at(r - 1, c + 1) + 2.0f * at(r, c + 1) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2.0f * at(r, c - 1) + at(r + 1, c - 1));
      const float gy = (at(r + 1, c - 1) + 2.0f * at(r + 1, c) + at(r + 1, c + 1)) -
                       (at(r - 1, c - 1) + 2.0f * at(r - 1, c) + at(r - 1, c + 1));
      g.x(r, c) = gx * norm;
      g.y(r, c) = gy * norm;
    }
  }
  return g;
}

Eigen::Vector2f wind_to_components(float speed_ms, float dir_deg) {
  const double rad = static_cast<double>(dir_deg) * std::numbers::pi / 180.0;
  return {static_cast<float>(-speed_ms * std::sin(rad)), static_cast<float>(speed_ms * std::cos(rad))};
}

UnitScale::UnitScale(float cell_size, float interval) : cell_size_m(cell_size), interval_minutes(interval) {
  if (!(cell_size_m > 0.0f)) throw std::invalid_argument("zero cell size");
  if (!(interval_minutes > 0.0f)) throw std::invalid_argument("zero interval length");
}

Eigen::Vector2f UnitScale::wind_vector(const WeatherRecord& r) const {
  return wind_to_components(wind_px_per_interval(r.wind_speed_ms), r.wind_dir_deg);
}

Raster arrival_in_intervals(const ArrivalGrid& arrival, float interval_minutes) {
  if (!(interval_minutes > 0.0f)) throw std::invalid_argument("zero interval length");
  return arrival.arrival / interval_minutes;
}

Raster encode_arrival(const Raster& arrival_intervals, float t_start, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least one interval");
  const float n = static_cast<float>(horizon);
  return arrival_intervals.unaryExpr([=](float t) {
    if (t <= t_start) return 0.0f;
    if (t <= t_start + n) return (t - t_start) / n;
    return kUnburnedCode;
  });
}

Raster initial_fire_channel(const Raster& arrival_intervals, float t_start) {
  return (arrival_intervals <= t_start).select(Raster::Zero(arrival_intervals.rows(), arrival_intervals.cols()),
                                               kUnburnedCode);
}

WeatherFeatures weather_features(const std::vector<WeatherRecord>& records, const UnitScale& scale) {
  WeatherFeatures f(static_cast<Eigen::Index>(records.size()), kWeatherFeatures);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto w = scale.wind_vector(records[i]);
    const auto row = static_cast<Eigen::Index>(i);
    f(row, 0) = records[i].temperature_c / kTemperatureFeatureScale;
    f(row, 1) = w.x() / kWindFeatureScale;
    f(row, 2) = w.y() / kWindFeatureScale;
  }
  return f;
}

std::vector<Raster> fuel_channels(const LandClassGrid& landclass, int num_classes, FuelEncoding encoding) {
  if (num_classes < 2) throw std::invalid_argument("need at least two land classes");
  if ((landclass.classes >= static_cast<std::uint8_t>(num_classes)).any()) {
    throw std::invalid_argument("land class id outside the fuel table");
  }
  const Raster ids = landclass.classes.cast<float>();
  if (encoding == FuelEncoding::scalar) return {ids / static_cast<float>(num_classes - 1)};
  std::vector<Raster> out;
  for (int k = 0; k < num_classes; ++k) out.push_back((ids == static_cast<float>(k)).cast<float>());
  return out;
}

FireSample make_sample(const Scene& scene, const WeatherSeries& weather, const ArrivalGrid& arrival,
                       const SampleWindow& window, int num_classes, FuelEncoding encoding) {
  scene.validate();
  if (arrival.rows() != scene.rows() || arrival.cols() != scene.cols()) {
    throw std::invalid_argument("arrival grid does not match scene");
  }
  if (window.t_start < 0 || window.horizon < 1 ||
      static_cast<std::size_t>(window.t_start + window.horizon) > weather.size()) {
    throw std::invalid_argument("sample window exceeds weather horizon");
  }
  const UnitScale scale(scene.cell_size_m(), weather.interval_minutes);
  const auto grads = elevation_to_gradients(scene.elevation);
  const Raster t = arrival_in_intervals(arrival, weather.interval_minutes);

  FireSample s;
  s.terrain = {grads.x, grads.y};
  for (auto& f : fuel_channels(scene.landclass, num_classes, encoding)) s.terrain.push_back(std::move(f));
  s.initial_fire = initial_fire_channel(t, static_cast<float>(window.t_start));
  s.target_fire = encode_arrival(t, static_cast<float>(window.t_start), window.horizon);
  s.weather_raw.assign(weather.records.begin() + window.t_start,
                       weather.records.begin() + window.t_start + window.horizon);
  s.weather_seq = weather_features(s.weather_raw, scale);
  s.horizon_intervals = window.horizon;
  s.cell_size_m = scene.cell_size_m();
  s.interval_minutes = weather.interval_minutes;
  s.fuel_encoding = encoding;
  s.num_classes = num_classes;
  return s;
}

std::vector<PixelIndex> active_perimeter(const Raster& fire) {
  std::vector<PixelIndex> out;
  const auto rows = fire.rows();
  const auto cols = fire.cols();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(fire(r, c) < kUnburnedCode)) continue;
      const bool edge = (r > 0 && fire(r - 1, c) == kUnburnedCode) ||
                        (r + 1 < rows && fire(r + 1, c) == kUnburnedCode) ||
                        (c > 0 && fire(r, c - 1) == kUnburnedCode) ||
                        (c + 1 < cols && fire(r, c + 1) == kUnburnedCode);
      if (edge) out.push_back({r, c});
    }
  }
  return out;
}

FireSample pad_sample(const FireSample& sample, Eigen::Index rows, Eigen::Index cols, Eigen::Index offset_row,
                      Eigen::Index offset_col) {
  if (rows < sample.rows() + offset_row || cols < sample.cols() + offset_col || offset_row < 0 || offset_col < 0) {
    throw std::invalid_argument("padding target smaller than sample");
  }
  const auto place = [&](const Raster& src, float fill) {
    Raster out = Raster::Constant(rows, cols, fill);
    out.block(offset_row, offset_col, src.rows(), src.cols()) = src;
    return out;
  };
  FireSample out = sample;
  for (std::size_t k = 0; k < out.terrain.size(); ++k) {
    // Only the class-0 one-hot channel is "on" for nonburnable padding.
    const bool nonburnable_onehot = sample.fuel_encoding == FuelEncoding::onehot && k == 2;
    out.terrain[k] = place(sample.terrain[k], nonburnable_onehot ? 1.0f : 0.0f);
  }
  out.initial_fire = place(sample.initial_fire, kUnburnedCode);
  out.target_fire = place(sample.target_fire, kUnburnedCode);
  return out;
}

FireSample crop_window(const FireSample& sample, Eigen::Index row0, Eigen::Index col0, Eigen::Index rows,
                       Eigen::Index cols) {
  if (row0 < 0 || col0 < 0 || row0 + rows > sample.rows() || col0 + cols > sample.cols()) {
    throw std::invalid_argument("crop window out of bounds");
  }
  FireSample out = sample;
  for (std::size_t k = 0; k < out.terrain.size(); ++k) out.terrain[k] = sample.terrain[k].block(row0, col0, rows, cols);
  out.initial_fire = sample.initial_fire.block(row0, col0, rows, cols);
  out.target_fire = sample.target_fire.block(row0, col0, rows, cols);
  return out;
}

FireSample crop_sample(const FireSample& sample, int size, std::mt19937_64& rng) {
  if (size < 1) throw std::invalid_argument("crop size must be positive");
  const Eigen::Index n = size;
  const FireSample* src = &sample;
  FireSample padded;
  if (sample.rows() < n || sample.cols() < n) {
    const auto rows = std::max(n, sample.rows());
    const auto cols = std::max(n, sample.cols());
    padded = pad_sample(sample, rows, cols, (rows - sample.rows()) / 2, (cols - sample.cols()) / 2);
    src = &padded;
  }
  const auto perimeter = active_perimeter(src->initial_fire);
  if (perimeter.empty()) throw std::runtime_error("inactive sample" + (sample.id.empty() ? "" : ": " + sample.id));
  std::uniform_int_distribution<std::size_t> pick(0, perimeter.size() - 1);
  const auto centre = perimeter[pick(rng)];
  const auto row0 = std::clamp<Eigen::Index>(centre.row - n / 2, 0, src->rows() - n);
  const auto col0 = std::clamp<Eigen::Index>(centre.col - n / 2, 0, src->cols() - n);
  return crop_window(*src, row0, col0, n, n);
}

Raster transform_raster(const Raster& r, const DihedralTransform& t) { return transform_array(r, t); }

Eigen::Vector2f transform_vector(const Eigen::Vector2f& v, const DihedralTransform& t) {
  Eigen::Vector2f out = v;
  if (t.flip_horizontal) out.x() = -out.x();
  for (int i = 0; i < wrap_turns(t.rot_quarter_turns); ++i) out = Eigen::Vector2f(-out.y(), out.x());
  return out;
}

float transform_compass_deg(float dir_deg, const DihedralTransform& t) {
  double d = dir_deg;
  if (t.flip_horizontal) d = 360.0 - d;
  d += 90.0 * wrap_turns(t.rot_quarter_turns);
  d = std::fmod(d, 360.0);
  auto out = static_cast<float>(d);
  return out >= 360.0f ? 0.0f : out;
}

FireSample apply_dihedral(const FireSample& sample, const DihedralTransform& t) {
  if ((t.rot_quarter_turns % 2) != 0 && sample.rows() != sample.cols()) {
    throw std::invalid_argument("odd quarter turns need a square sample");
  }
  FireSample out = sample;
  for (auto& ch : out.terrain) ch = transform_array(ch, t);
  // Slope is a vector field: co-rotate its components after moving the pixels.
  for (Eigen::Index i = 0; i < out.terrain[0].size(); ++i) {
    const auto g = transform_vector({out.terrain[0](i), out.terrain[1](i)}, t);
    out.terrain[0](i) = g.x();
    out.terrain[1](i) = g.y();
  }
  out.initial_fire = transform_array(sample.initial_fire, t);
  out.target_fire = transform_array(sample.target_fire, t);
  for (Eigen::Index i = 0; i < out.weather_seq.rows(); ++i) {
    const auto w = transform_vector({out.weather_seq(i, 1), out.weather_seq(i, 2)}, t);
    out.weather_seq(i, 1) = w.x();
    out.weather_seq(i, 2) = w.y();
  }
  for (auto& r : out.weather_raw) r.wind_dir_deg = transform_compass_deg(r.wind_dir_deg, t);
  return out;
}

Scene transform_scene(const Scene& scene, const DihedralTransform& t) {
  Scene out = scene;
  out.elevation.values = transform_array(scene.elevation.values, t);
  out.landclass.classes = transform_array(scene.landclass.classes, t);
  return out;
}

WeatherSeries transform_weather(const WeatherSeries& weather, const DihedralTransform& t) {
  WeatherSeries out = weather;
  for (auto& r : out.records) r.wind_dir_deg = transform_compass_deg(r.wind_dir_deg, t);
  return out;
}

}  // namespace firemu
