#include "firemu/grids.hpp"

#include "firemu/keyvalue.hpp"
#include "firemu/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace firemu {

namespace {

std::runtime_error parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Grid2D::Grid2D(Eigen::Index rows, Eigen::Index cols, float fill, float cell_size)
    : values(Raster::Constant(rows, cols, fill)), cell_size_m(cell_size) {}

Grid2D::Grid2D(Raster v, float cell_size, float nodata_value)
    : values(std::move(v)), cell_size_m(cell_size), nodata(nodata_value) {}

void Grid2D::validate() const {
  if (rows() < 1 || cols() < 1) throw std::invalid_argument("grid must have at least one row and column");
  if (!(cell_size_m > 0.0f)) throw std::invalid_argument("cell size must be positive");
}

void WeatherSeries::validate() const {
  if (records.empty()) throw std::invalid_argument("weather series is empty");
  if (!(interval_minutes > 0.0f)) throw std::invalid_argument("interval_minutes must be positive");
  for (const auto& r : records) {
    if (!(r.wind_speed_ms >= 0.0f)) throw std::invalid_argument("negative wind speed");
    if (!(r.wind_dir_deg >= 0.0f && r.wind_dir_deg < 360.0f)) {
      throw std::invalid_argument("wind direction outside [0,360)");
    }
  }
}

void Scene::validate() const {
  elevation.validate();
  if (elevation.rows() != landclass.rows() || elevation.cols() != landclass.cols()) {
    throw std::invalid_argument("scene elevation and landclass dimensions differ");
  }
}

Grid2D read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::map<std::string, std::string> header;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> body;
  std::size_t first_body_line = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = text::split_whitespace(line);
    if (tokens.empty()) continue;
    if (!text::parse_double(tokens[0])) {
      if (tokens.size() != 2) throw parse_error(path, line_no, "malformed header line");
      header[text::lower(tokens[0])] = std::string(tokens[1]);
      continue;
    }
    first_body_line = line_no;
    break;
  }

  const auto require = [&](const char* key) -> double {
    const auto it = header.find(key);
    if (it == header.end()) throw parse_error(path, line_no, std::string("malformed header: missing ") + key);
    const auto v = text::parse_double(it->second);
    if (!v) throw parse_error(path, line_no, std::string("malformed header: bad value for ") + key);
    return *v;
  };
  const auto ncols = static_cast<Eigen::Index>(require("ncols"));
  const auto nrows = static_cast<Eigen::Index>(require("nrows"));
  const auto cellsize = static_cast<float>(require("cellsize"));
  const auto nodata = static_cast<float>(require("nodata_value"));
  if (ncols < 1 || nrows < 1) throw parse_error(path, line_no, "malformed header: empty grid");
  if (!(cellsize > 0.0f)) throw parse_error(path, line_no, "malformed header: cellsize must be positive");

  body.reserve(static_cast<std::size_t>(nrows * ncols));
  const auto consume = [&](const std::string& l, std::size_t at) {
    for (const auto tok : text::split_whitespace(l)) {
      const auto v = text::parse_float(tok);
      if (!v) throw parse_error(path, at, "non-numeric token '" + std::string(tok) + "'");
      body.push_back(*v);
    }
  };
  if (first_body_line != 0) {
    consume(line, first_body_line);
    while (std::getline(in, line)) {
      ++line_no;
      consume(line, line_no);
    }
  }
  if (body.size() != static_cast<std::size_t>(nrows * ncols)) {
    throw parse_error(path, line_no,
                      "token count mismatch: expected " + std::to_string(nrows * ncols) + ", found " +
                          std::to_string(body.size()));
  }

  Grid2D grid;
  grid.values = Eigen::Map<Raster>(body.data(), nrows, ncols);
  grid.cell_size_m = cellsize;
  grid.nodata = nodata;
  return grid;
}

void write_ascii_grid(const Grid2D& grid, const std::filesystem::path& path) {
  grid.validate();
  std::ostringstream out;
  out << "ncols " << grid.cols() << '\n'
      << "nrows " << grid.rows() << '\n'
      << "xllcorner 0\n"
      << "yllcorner 0\n"
      << "cellsize " << text::format_float(grid.cell_size_m) << '\n'
      << "NODATA_value " << text::format_float(grid.nodata) << '\n';
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      if (c) out << ' ';
      const float v = grid.values(r, c);
      out << text::format_float(std::isnan(v) ? grid.nodata : v);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

LandClassGrid read_landclass_grid(const std::filesystem::path& path) {
  const auto grid = read_ascii_grid(path);
  LandClassGrid out;
  out.classes.resize(grid.rows(), grid.cols());
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      const float v = grid.values(r, c);
      if (grid.is_nodata(r, c)) {
        out.classes(r, c) = 0;
        continue;
      }
      if (v < 0.0f || v > 255.0f || v != std::floor(v)) {
        throw std::runtime_error(path.string() + ": land class at row " + std::to_string(r) +
                                 " is not an integer in [0,255]");
      }
      out.classes(r, c) = static_cast<std::uint8_t>(v);
    }
  }
  return out;
}

void write_landclass_grid(const LandClassGrid& grid, float cell_size_m, const std::filesystem::path& path) {
  write_ascii_grid(Grid2D(grid.classes.cast<float>(), cell_size_m), path);
}

ArrivalGrid read_arrival_grid(const std::filesystem::path& path) {
  const auto grid = read_ascii_grid(path);
  ArrivalGrid out;
  out.cell_size_m = grid.cell_size_m;
  out.arrival = (grid.values == grid.nodata).select(kUnburned, grid.values);
  return out;
}

void write_arrival_grid(const ArrivalGrid& grid, const std::filesystem::path& path) {
  Grid2D g(grid.arrival, grid.cell_size_m);
  g.values = grid.arrival.isFinite().select(grid.arrival, g.nodata);
  write_ascii_grid(g, path);
}

WeatherSeries read_weather_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  WeatherSeries series;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> columns;
  int idx_t = -1, idx_temp = -1, idx_speed = -1, idx_dir = -1;

  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      const auto body = text::trim(trimmed.substr(1));
      const auto eq = body.find('=');
      if (eq != std::string_view::npos && text::trim(body.substr(0, eq)) == "interval_minutes") {
        const auto v = text::parse_float(body.substr(eq + 1));
        if (!v || !(*v > 0.0f)) throw parse_error(path, line_no, "bad interval_minutes");
        series.interval_minutes = *v;
      }
      continue;
    }
    const auto fields = text::split(trimmed, ',');
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = text::lower(fields[i]);
        if (name == "t_index") idx_t = static_cast<int>(i);
        if (name == "temperature_c") idx_temp = static_cast<int>(i);
        if (name == "wind_speed_ms") idx_speed = static_cast<int>(i);
        if (name == "wind_dir_deg") idx_dir = static_cast<int>(i);
        columns.emplace_back(name);
      }
      for (const auto& [idx, name] : {std::pair{idx_t, "t_index"}, {idx_temp, "temperature_c"},
                                      {idx_speed, "wind_speed_ms"}, {idx_dir, "wind_dir_deg"}}) {
        if (idx < 0) throw parse_error(path, line_no, std::string("missing column ") + name);
      }
      continue;
    }
    if (fields.size() != columns.size()) throw parse_error(path, line_no, "missing column value");
    const auto t = text::parse_int(fields[static_cast<std::size_t>(idx_t)]);
    const auto temp = text::parse_float(fields[static_cast<std::size_t>(idx_temp)]);
    const auto speed = text::parse_float(fields[static_cast<std::size_t>(idx_speed)]);
    const auto dir = text::parse_float(fields[static_cast<std::size_t>(idx_dir)]);
    if (!t || !temp || !speed || !dir) throw parse_error(path, line_no, "non-numeric field");
    if (*t != static_cast<long long>(series.records.size())) throw parse_error(path, line_no, "gap in t_index");
    if (*speed < 0.0f) throw parse_error(path, line_no, "negative speed");
    if (!(*dir >= 0.0f && *dir < 360.0f)) throw parse_error(path, line_no, "direction outside [0,360)");
    series.records.push_back({*temp, *speed, *dir});
  }
  if (columns.empty()) throw std::runtime_error(path.string() + ": missing column header");
  if (series.records.empty()) throw std::runtime_error(path.string() + ": no weather records");
  return series;
}

void write_weather_csv(const WeatherSeries& series, const std::filesystem::path& path) {
  std::ostringstream out;
  if (series.interval_minutes != 30.0f) {
    out << "# interval_minutes=" << text::format_float(series.interval_minutes) << '\n';
  }
  out << "t_index,temperature_c,wind_speed_ms,wind_dir_deg\n";
  for (std::size_t i = 0; i < series.records.size(); ++i) {
    const auto& r = series.records[i];
    out << i << ',' << text::format_float(r.temperature_c) << ',' << text::format_float(r.wind_speed_ms) << ','
        << text::format_float(r.wind_dir_deg) << '\n';
  }
  write_text_file(path, out.str());
}

void write_pgm(const Raster& values, float lo, float hi, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  const float span = hi > lo ? hi - lo : 1.0f;
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const float v = std::isfinite(values(r, c)) ? values(r, c) : hi;
      const float t = std::clamp((v - lo) / span, 0.0f, 1.0f);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0f))));
    }
  }
  write_text_file(path, out.str());
}

void write_diverging_ppm(const Raster& values, float magnitude, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "P6\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  const float m = magnitude > 0.0f ? magnitude : 1.0f;
  // positive -> purple (128, 0, 128), negative -> orange (255, 140, 0), zero -> white
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const float t = std::clamp(values(r, c) / m, -1.0f, 1.0f);
      const float a = std::abs(t);
      const float tr = t >= 0.0f ? 128.0f : 255.0f;
      const float tg = t >= 0.0f ? 0.0f : 140.0f;
      const float tb = t >= 0.0f ? 128.0f : 0.0f;
      for (const float target : {tr, tg, tb}) {
        const float v = 255.0f + (target - 255.0f) * a;
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
      }
    }
  }
  write_text_file(path, out.str());
}

}  // namespace firemu
