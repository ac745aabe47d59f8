#include "firemu/firesim.hpp"

#include "firemu/keyvalue.hpp"
#include "firemu/preprocess.hpp"
#include "firemu/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace firemu {

void FuelTable::validate() const {
  if (base_ros.empty()) throw std::invalid_argument("fuel table is empty");
  if (base_ros[0] != 0.0f) throw std::invalid_argument("fuel class 0 must have zero base rate of spread");
  for (const float v : base_ros) {
    if (!std::isfinite(v) || v < 0.0f) throw std::invalid_argument("fuel base rate of spread must be finite and >= 0");
  }
}

void RosParams::validate() const {
  if (!std::isfinite(k_wind) || !std::isfinite(k_slope) || !std::isfinite(k_temp) || !std::isfinite(t_ref)) {
    throw std::invalid_argument("rate-of-spread parameters must be finite");
  }
  if (k_wind < 0.0f || k_slope < 0.0f) throw std::invalid_argument("k_wind and k_slope must be non-negative");
}

float rate_of_spread(int fuel_class, const Eigen::Vector2f& u, const Eigen::Vector2f& wind, const Eigen::Vector2f& slope,
                     float temperature_c, const RosParams& params, const FuelTable& table) {
  if (fuel_class < 0 || fuel_class >= table.num_classes()) {
    throw std::out_of_range("unknown fuel class " + std::to_string(fuel_class));
  }
  if (fuel_class == 0) return 0.0f;
  const float base = table.base_ros[static_cast<std::size_t>(fuel_class)];
  const float temp = std::max(0.1f, 1.0f + params.k_temp * (temperature_c - params.t_ref));
  return base * std::exp(params.k_wind * wind.dot(u)) * std::exp(params.k_slope * slope.dot(u)) * temp;
}

const std::vector<SpreadModel::Offset>& SpreadModel::stencil() {
  static const std::vector<Offset> offsets{
      {0, 1},  {1, 0},  {0, -1}, {-1, 0},                                        // axis
      {1, 1},  {1, -1}, {-1, 1}, {-1, -1},                                       // diagonal
      {1, 2},  {2, 1},  {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2},  // knight
  };
  return offsets;
}

SpreadModel::SpreadModel(const Scene& scene, const WeatherSeries& weather, const RosParams& params,
                         const FuelTable& table)
    : rows_(scene.rows()), cols_(scene.cols()), landclass_(&scene.landclass), params_(params), table_(table) {
  scene.validate();
  weather.validate();
  params.validate();
  table.validate();
  if ((scene.landclass.classes >= static_cast<std::uint8_t>(table.num_classes())).any()) {
    throw std::out_of_range("scene contains a land class missing from the fuel table");
  }
  auto g = elevation_to_gradients(scene.elevation);
  grad_x_ = std::move(g.x);
  grad_y_ = std::move(g.y);
  const UnitScale scale(scene.cell_size_m(), weather.interval_minutes);
  for (const auto& r : weather.records) {
    wind_.push_back(scale.wind_vector(r));
    temperature_.push_back(r.temperature_c);
  }
}

bool SpreadModel::burnable(Eigen::Index r, Eigen::Index c) const {
  return r >= 0 && c >= 0 && r < rows_ && c < cols_ && landclass_->classes(r, c) != 0;
}

double SpreadModel::edge_time(Eigen::Index row, Eigen::Index col, std::size_t dir, double depart) const {
  const auto [dr, dc] = stencil()[dir];
  const Eigen::Index r2 = row + dr;
  const Eigen::Index c2 = col + dc;
  if (!burnable(row, col) || !burnable(r2, c2)) return std::numeric_limits<double>::infinity();
  // Edges may not cut corners past nonburnable cells.
  if (std::abs(dr) == 1 && std::abs(dc) == 1) {
    if (!burnable(row + dr, col) || !burnable(row, col + dc)) return std::numeric_limits<double>::infinity();
  } else if (std::abs(dc) == 2) {
    if (!burnable(row, col + dc / 2) || !burnable(row + dr, col + dc / 2)) return std::numeric_limits<double>::infinity();
  } else if (std::abs(dr) == 2) {
    if (!burnable(row + dr / 2, col) || !burnable(row + dr / 2, col + dc)) return std::numeric_limits<double>::infinity();
  }
  const auto interval = static_cast<std::size_t>(std::floor(depart));
  if (interval >= wind_.size()) return std::numeric_limits<double>::infinity();

  const float length = std::sqrt(static_cast<float>(dr * dr + dc * dc));
  const Eigen::Vector2f u(static_cast<float>(dc) / length, static_cast<float>(dr) / length);
  const auto ros_at = [&](Eigen::Index r, Eigen::Index c) {
    return rate_of_spread(landclass_->classes(r, c), u, wind_[interval], {grad_x_(r, c), grad_y_(r, c)},
                          temperature_[interval], params_, table_);
  };
  const double a = ros_at(row, col);
  const double b = ros_at(r2, c2);
  if (!(a > 0.0) || !(b > 0.0)) return std::numeric_limits<double>::infinity();
  return 0.5 * length * (1.0 / a + 1.0 / b);
}

ArrivalGrid simulate_arrival(const Scene& scene, const WeatherSeries& weather, const IgnitionSpec& ignition,
                             const RosParams& params, const FuelTable& table, SimStats* stats) {
  const SpreadModel model(scene, weather, params, table);
  const auto rows = model.rows();
  const auto cols = model.cols();
  const double horizon = model.horizon();

  std::vector<double> time(static_cast<std::size_t>(rows * cols), std::numeric_limits<double>::infinity());
  std::vector<char> settled(time.size(), 0);
  using Entry = std::pair<double, Eigen::Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;

  SimStats local;
  for (const auto& ig : ignition.points) {
    if (ig.row < 0 || ig.col < 0 || ig.row >= rows || ig.col >= cols) {
      throw std::out_of_range("ignition outside the scene");
    }
    if (!(ig.time >= 0.0f)) throw std::invalid_argument("ignition time must be non-negative");
    if (!model.burnable(ig.row, ig.col)) {
      std::cerr << "warning: ignition at (" << ig.row << ", " << ig.col << ") is nonburnable; skipped\n";
      ++local.skipped_ignitions;
      continue;
    }
    const auto idx = ig.row * cols + ig.col;
    if (ig.time < time[static_cast<std::size_t>(idx)]) {
      time[static_cast<std::size_t>(idx)] = ig.time;
      queue.emplace(ig.time, idx);
    }
  }
  if (ignition.points.empty() || local.skipped_ignitions == ignition.points.size()) {
    throw std::invalid_argument("no usable ignition points");
  }

  const auto& offsets = SpreadModel::stencil();
  while (!queue.empty()) {
    const auto [t, idx] = queue.top();
    queue.pop();
    auto& done = settled[static_cast<std::size_t>(idx)];
    if (done || t > time[static_cast<std::size_t>(idx)]) continue;
    if (t > horizon) break;
    done = 1;
    ++local.settled;
    if (t >= horizon) continue;
    const Eigen::Index r = idx / cols;
    const Eigen::Index c = idx % cols;
    for (std::size_t d = 0; d < offsets.size(); ++d) {
      const Eigen::Index r2 = r + offsets[d].dr;
      const Eigen::Index c2 = c + offsets[d].dc;
      if (r2 < 0 || c2 < 0 || r2 >= rows || c2 >= cols) continue;
      const auto idx2 = static_cast<std::size_t>(r2 * cols + c2);
      if (settled[idx2]) continue;
      const double t2 = t + model.edge_time(r, c, d, t);
      if (t2 < time[idx2]) {
        time[idx2] = t2;
        queue.emplace(t2, static_cast<Eigen::Index>(idx2));
      }
    }
  }

  ArrivalGrid out;
  out.cell_size_m = scene.cell_size_m();
  out.arrival.resize(rows, cols);
  const double minutes = weather.interval_minutes;
  for (Eigen::Index i = 0; i < rows * cols; ++i) {
    const double t = time[static_cast<std::size_t>(i)];
    out.arrival(i) = settled[static_cast<std::size_t>(i)] && t <= horizon ? static_cast<float>(t * minutes) : kUnburned;
  }
  if (stats) *stats = local;
  return out;
}

namespace {

struct Wave {
  double kx, ky, phase, amplitude;
};

std::vector<Wave> random_waves(std::mt19937_64& rng, int count, double min_wavelength, double max_wavelength,
                               double amplitude) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> wavelength(min_wavelength, max_wavelength);
  std::uniform_real_distribution<double> weight(0.3, 1.0);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) {
    const double theta = angle(rng);
    const double k = 2.0 * std::numbers::pi / wavelength(rng);
    waves.push_back({k * std::cos(theta), k * std::sin(theta), angle(rng), amplitude * weight(rng)});
  }
  return waves;
}

Raster evaluate_waves(const std::vector<Wave>& waves, Eigen::Index rows, Eigen::Index cols) {
  Raster out = Raster::Zero(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v = 0.0;
      for (const auto& w : waves) v += w.amplitude * std::sin(w.kx * c + w.ky * r + w.phase);
      out(r, c) = static_cast<float>(v);
    }
  }
  return out;
}

float quantile(const Raster& values, double q) {
  std::vector<float> sorted(values.data(), values.data() + values.size());
  const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

void stamp_river(ClassRaster& classes, std::mt19937_64& rng) {
  const auto rows = classes.rows();
  const auto cols = classes.cols();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const bool horizontal = u(rng) < 0.5;
  const int vertices = 5;
  std::vector<Eigen::Vector2d> pts;  // (x, y)
  for (int i = 0; i < vertices; ++i) {
    const double along = static_cast<double>(i) / (vertices - 1);
    const double across = 0.15 + 0.7 * u(rng);
    pts.emplace_back(horizontal ? along * (cols - 1) : across * (cols - 1),
                     horizontal ? across * (rows - 1) : along * (rows - 1));
  }
  const double radius = 1.2;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Eigen::Vector2d a = pts[i];
    const Eigen::Vector2d b = pts[i + 1];
    const int steps = static_cast<int>(std::ceil((b - a).norm() * 4.0)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(s) / steps);
      for (auto r = static_cast<Eigen::Index>(std::floor(p.y() - radius)); r <= p.y() + radius; ++r) {
        for (auto c = static_cast<Eigen::Index>(std::floor(p.x() - radius)); c <= p.x() + radius; ++c) {
          if (r < 0 || c < 0 || r >= rows || c >= cols) continue;
          if ((Eigen::Vector2d(c, r) - p).norm() <= radius) classes(r, c) = 0;
        }
      }
    }
  }
}

}  // namespace

Scene generate_scene(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols, int num_classes, float cell_size_m) {
  if (rows < 64 || cols < 64) throw std::invalid_argument("generated scenes need at least 64x64 cells");
  if (num_classes < 2 || num_classes > 255) throw std::invalid_argument("num_classes must be in [2, 255]");
  std::mt19937_64 rng(seed);

  Scene scene;
  const auto relief = random_waves(rng, 8, 32.0, 160.0, 150.0 / 8.0);
  scene.elevation = Grid2D(evaluate_waves(relief, rows, cols) + 150.0f, cell_size_m);

  const Raster fuel_noise = evaluate_waves(random_waves(rng, 8, 16.0, 96.0, 1.0), rows, cols);
  // Lowest 5% of the noise becomes nonburnable patches; the rest splits evenly
  // across the burnable classes.
  const float lake_level = quantile(fuel_noise, 0.05);
  std::vector<float> cuts;
  for (int k = 1; k < num_classes - 1; ++k) {
    cuts.push_back(quantile(fuel_noise, 0.05 + 0.95 * k / static_cast<double>(num_classes - 1)));
  }
  scene.landclass.classes.resize(rows, cols);
  for (Eigen::Index i = 0; i < fuel_noise.size(); ++i) {
    const float v = fuel_noise(i);
    std::uint8_t cls = 0;
    if (v > lake_level) {
      cls = 1;
      for (const float cut : cuts) cls += v > cut ? 1 : 0;
    }
    scene.landclass.classes(i) = cls;
  }
  stamp_river(scene.landclass.classes, rng);
  return scene;
}

WeatherSeries generate_weather(std::uint64_t seed, int n_intervals) {
  if (n_intervals < 1) throw std::invalid_argument("weather needs at least one interval");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> temp0(15.0f, 35.0f);
  std::uniform_real_distribution<float> speed0(2.0f, 10.0f);
  std::uniform_real_distribution<float> dir0(0.0f, 360.0f);
  std::normal_distribution<float> step(0.0f, 1.0f);

  WeatherSeries series;
  WeatherRecord r{temp0(rng), speed0(rng), dir0(rng)};
  if (r.wind_dir_deg >= 360.0f) r.wind_dir_deg = 0.0f;
  series.records.push_back(r);
  for (int i = 1; i < n_intervals; ++i) {
    r.temperature_c = std::clamp(r.temperature_c + 1.5f * step(rng), 5.0f, 45.0f);
    r.wind_speed_ms = std::clamp(r.wind_speed_ms + 1.5f * step(rng), 0.0f, 15.0f);
    const float turn = std::clamp(10.0f * step(rng), -30.0f, 30.0f);
    float d = std::fmod(r.wind_dir_deg + turn + 360.0f, 360.0f);
    if (d >= 360.0f || d < 0.0f) d = 0.0f;
    r.wind_dir_deg = d;
    series.records.push_back(r);
  }
  return series;
}

IgnitionSpec generate_ignition(std::uint64_t seed, const Scene& scene) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto rows = scene.rows();
  const auto cols = scene.cols();
  std::uniform_int_distribution<Eigen::Index> dr(-rows / 8, rows / 8);
  std::uniform_int_distribution<Eigen::Index> dc(-cols / 8, cols / 8);
  for (int attempt = 0; attempt < 256; ++attempt) {
    const auto r = rows / 2 + dr(rng);
    const auto c = cols / 2 + dc(rng);
    if (scene.landclass.classes(r, c) != 0) return {{{r, c, 0.0f}}};
  }
  // Fall back to the burnable cell nearest the centre.
  Eigen::Index best_r = -1, best_c = -1;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double d = std::hypot(static_cast<double>(r - rows / 2), static_cast<double>(c - cols / 2));
      if (scene.landclass.classes(r, c) != 0 && d < best) {
        best = d;
        best_r = r;
        best_c = c;
      }
    }
  }
  if (best_r < 0) throw std::runtime_error("scene has no burnable cells");
  return {{{best_r, best_c, 0.0f}}};
}

IgnitionSpec read_ignition(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  IgnitionSpec spec;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#' || t.starts_with("row")) continue;
    const auto f = text::split(t, ',');
    const auto r = f.size() == 3 ? text::parse_int(f[0]) : std::nullopt;
    const auto c = f.size() == 3 ? text::parse_int(f[1]) : std::nullopt;
    const auto time = f.size() == 3 ? text::parse_float(f[2]) : std::nullopt;
    if (!r || !c || !time) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad ignition");
    spec.points.push_back({*r, *c, *time});
  }
  if (spec.points.empty()) throw std::runtime_error(path.string() + ": no ignition points");
  return spec;
}

void write_ignition(const IgnitionSpec& spec, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "row,col,time_intervals\n";
  for (const auto& p : spec.points) out << p.row << ',' << p.col << ',' << text::format_float(p.time) << '\n';
  write_text_file(path, out.str());
}

SimConfig read_sim_config(const std::filesystem::path& path) {
  const auto blocks = read_key_value_file(path);
  const auto& kv = blocks.front();
  SimConfig cfg;
  cfg.ros.k_wind = static_cast<float>(kv.get_double_or("k_wind", cfg.ros.k_wind));
  cfg.ros.k_slope = static_cast<float>(kv.get_double_or("k_slope", cfg.ros.k_slope));
  cfg.ros.k_temp = static_cast<float>(kv.get_double_or("k_temp", cfg.ros.k_temp));
  cfg.ros.t_ref = static_cast<float>(kv.get_double_or("t_ref", cfg.ros.t_ref));
  if (kv.has("fuel_0")) {
    cfg.fuel.base_ros.clear();
    for (int k = 0; kv.has("fuel_" + std::to_string(k)); ++k) {
      cfg.fuel.base_ros.push_back(static_cast<float>(kv.get_double("fuel_" + std::to_string(k))));
    }
  }
  cfg.ros.validate();
  cfg.fuel.validate();
  return cfg;
}

void write_sim_config(const SimConfig& config, const std::filesystem::path& path) {
  KeyValueBlock kv;
  kv.set("k_wind", text::format_float(config.ros.k_wind));
  kv.set("k_slope", text::format_float(config.ros.k_slope));
  kv.set("k_temp", text::format_float(config.ros.k_temp));
  kv.set("t_ref", text::format_float(config.ros.t_ref));
  for (std::size_t k = 0; k < config.fuel.base_ros.size(); ++k) {
    kv.set("fuel_" + std::to_string(k), text::format_float(config.fuel.base_ros[k]));
  }
  write_text_file(path, format_key_value({kv}));
}

}  // namespace firemu
