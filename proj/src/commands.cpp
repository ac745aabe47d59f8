#include "firemu/commands.hpp"

#include "firemu/keyvalue.hpp"
#include "firemu/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace firemu {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sample_id(int i) {
  std::ostringstream s;
  s << "fire_" << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

void write_difference(const Raster& pred, const Raster& target, float cell, const fs::path& stem) {
  Grid2D diff;
  diff.values = difference_map(pred, target);
  diff.cell_size_m = cell;
  write_ascii_grid(diff, fs::path(stem).replace_extension(".asc"));
  write_diverging_ppm(diff.values, kUnburnedCode, fs::path(stem).replace_extension(".ppm"));
}

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RunManifest cmd_generate(const GenerateOptions& o, std::ostream& log) {
  if (o.count < 1) throw std::invalid_argument("count must be at least 1");
  if (o.intervals < 1) throw std::invalid_argument("intervals must be at least 1");
  std::error_code ec;
  fs::create_directories(o.out, ec);
  if (ec) throw std::runtime_error("cannot create " + o.out.string() + ": " + ec.message());

  RunManifest m;
  m.root = fs::absolute(o.out);
  m.seed = o.seed;
  m.test_split = o.test_split;
  m.num_classes = o.num_classes;
  std::vector<std::string> split(static_cast<std::size_t>(o.count), "train");
  if (o.count >= 2) {
    for (const auto i : split_dataset(static_cast<std::size_t>(o.count), o.test_split, o.seed).test) split[i] = "test";
  }
  for (int i = 0; i < o.count; ++i) {
    const std::uint64_t s = o.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    const Scene scene = generate_scene(s, o.rows, o.cols, o.num_classes, o.cell_size_m);
    const WeatherSeries weather = generate_weather(s ^ 0x9e3779b97f4a7c15ULL, o.intervals);
    const IgnitionSpec ignition = generate_ignition(s ^ 0xbf58476d1ce4e5b9ULL, scene);

    ManifestEntry e;
    e.id = sample_id(i);
    const fs::path dir = m.root / e.id;
    fs::create_directories(dir);
    e.elevation = dir / "elevation.asc";
    e.landclass = dir / "landclass.asc";
    e.weather = dir / "weather.csv";
    e.ignition = dir / "ignition.csv";
    e.arrival = dir / "arrival.asc";
    e.split = split[static_cast<std::size_t>(i)];
    e.window = default_window(static_cast<std::size_t>(i), o.intervals);
    write_ascii_grid(scene.elevation, e.elevation);
    write_landclass_grid(scene.landclass, scene.cell_size_m(), e.landclass);
    write_weather_csv(weather, e.weather);
    write_ignition(ignition, e.ignition);
    m.samples.push_back(std::move(e));
  }
  write_manifest(m, m.root / "manifest.txt");
  log << "generated " << o.count << " scenes (" << o.rows << "x" << o.cols << ", " << o.intervals
      << " intervals) in " << m.root.string() << '\n';
  return m;
}

SimulateReport cmd_simulate(const fs::path& manifest_path, const SimConfig& config, std::ostream& log) {
  const RunManifest m = read_manifest(manifest_path);
  SimulateReport report;
  std::ostringstream timing;
  timing << "id,seconds,status\n";
  for (const auto& e : m.samples) {
    const auto start = Clock::now();
    try {
      const Scene scene = load_scene(e);
      const ArrivalGrid arrival = simulate_arrival(scene, read_weather_csv(e.weather), read_ignition(e.ignition),
                                                   config.ros, config.fuel);
      write_arrival_grid(arrival, e.arrival);
      const double secs = seconds_since(start);
      report.ids.push_back(e.id);
      report.seconds.push_back(secs);
      timing << e.id << ',' << text::format_double(secs) << ",ok\n";
      log << e.id << ": " << std::fixed << std::setprecision(3) << secs << " s\n";
    } catch (const std::exception& ex) {
      report.failures.push_back(e.id);
      timing << e.id << ",,failed\n";
      log << e.id << ": FAILED: " << ex.what() << '\n';
    }
  }
  write_text_file(m.root / "timing.csv", timing.str());
  return report;
}

TrainResult cmd_train(const TrainOptions& o, std::ostream& log) {
  o.train.validate();
  const RunManifest m = read_manifest(o.manifest);
  DatasetSplit split;
  split.train = m.indices("train");
  split.test = m.indices("test");
  if (split.train.empty() || split.test.empty()) throw std::runtime_error("manifest needs train and test samples");
  const auto expected = split_dataset(m.samples.size(), o.train.test_split, m.seed).test.size();
  if (expected != split.test.size()) {
    throw std::runtime_error("manifest has " + std::to_string(split.test.size()) + " test samples but test_split " +
                             text::format_double(o.train.test_split) + " implies " + std::to_string(expected));
  }
  const auto dataset = load_samples(m, "all");
  TrainResult result{build_model(o.model, o.train.seed), {}, split};
  log << "training on " << split.train.size() << " samples, validating on " << split.test.size() << '\n';
  result.history = train_on_split(result.model, dataset, split, o.train, [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " train " << std::fixed << std::setprecision(4) << r.train_loss << " val "
        << r.val_loss << " (" << std::setprecision(1) << r.seconds << " s)\n";
    log.flush();
  });
  save_model(result.model, o.out);
  write_history(result.history, fs::path(o.out).replace_extension(".history.csv"));
  write_train_config(o.train, fs::path(o.out).replace_extension(".train.cfg"));
  log << "saved " << o.out.string() << '\n';
  return result;
}

Raster cmd_predict(const fs::path& model_path, const fs::path& manifest_path, const std::string& id,
                   const fs::path& out_dir, std::ostream& log) {
  const Model model = load_model(model_path);
  const RunManifest m = read_manifest(manifest_path);
  const FireSample sample = load_sample(m, m.find(id));
  const Raster pred = predict(model, sample);
  fs::create_directories(out_dir);
  Grid2D g;
  g.values = pred;
  g.cell_size_m = sample.cell_size_m;
  write_ascii_grid(g, out_dir / "prediction.asc");
  write_difference(pred, sample.target_fire, sample.cell_size_m, out_dir / "difference");
  const auto pm = burned_mask(pred);
  const auto tm = burned_mask(sample.target_fire);
  log << id << ": loss " << loss_value(pred, sample.target_fire, sample.initial_fire, 1e-6) << " jaccard "
      << jaccard(pm, tm) << " dice " << dice(pm, tm) << '\n';
  return pred;
}

MetricsReport cmd_evaluate(const EvaluateOptions& o, std::ostream& log) {
  const RunManifest m = read_manifest(o.manifest);
  const auto samples = load_samples(m, o.split);
  std::optional<Model> model;
  if (o.model) model = load_model(*o.model);
  const Predictor predictor = model ? model_predictor(*model) : Predictor(persistence_prediction);
  const MetricsReport report = evaluate_dataset(predictor, samples, o.tau);
  log << (model ? "emulator" : "persistence baseline") << ", split " << o.split << '\n' << format_report_text(report);
  if (!o.out.empty()) {
    fs::create_directories(o.out / "differences");
    write_text_file(o.out / "report.txt", format_report_text(report));
    write_text_file(o.out / "report.kv", format_report_key_value(report));
    for (const auto& s : samples) write_difference(predictor(s), s.target_fire, s.cell_size_m, o.out / "differences" / s.id);
  }
  return report;
}

ProbabilityGrid cmd_ensemble(const EnsembleOptions& o, std::ostream& log) {
  const Model model = load_model(o.model);
  const RunManifest m = read_manifest(o.manifest);
  const FireSample sample = load_sample(m, m.find(o.id));
  const ProbabilityGrid grid = ensemble_forecast(model, sample, o.spec);
  const BurnMask mask = exceedance_mask(grid, o.level);
  fs::create_directories(o.out);
  write_probability_grid(grid, sample.cell_size_m, o.out / "probability.asc");
  write_pgm(grid.prob, 0.0f, 1.0f, o.out / "probability.pgm");
  Grid2D g;
  g.values = mask.burned.cast<float>();
  g.cell_size_m = sample.cell_size_m;
  write_ascii_grid(g, o.out / "exceedance.asc");
  log << o.id << ": " << o.spec.n_members << " members, " << mask.count() << " pixels at probability >= " << o.level
      << '\n';
  return grid;
}

BenchReport cmd_bench(const BenchOptions& o, std::ostream& log) {
  if (o.repetitions < 3) throw std::invalid_argument("bench needs at least 3 repetitions");
  if (o.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const Model model = o.model.empty() ? build_model(ModelConfig{}, 0) : load_model(o.model);
  const RunManifest m = read_manifest(o.manifest);
  std::size_t n = m.samples.size();
  if (o.scenes > 0) n = std::min(n, static_cast<std::size_t>(o.scenes));

  BenchReport report;
  std::vector<double> sim_all;
  std::vector<double> emu_all;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = m.samples[i];
    const Scene scene = load_scene(e);
    WeatherSeries weather = read_weather_csv(e.weather);
    if (weather.size() < static_cast<std::size_t>(o.horizon)) {
      throw std::runtime_error(e.id + ": weather has fewer than " + std::to_string(o.horizon) + " intervals");
    }
    weather.records.resize(static_cast<std::size_t>(o.horizon));
    const IgnitionSpec ignition = read_ignition(e.ignition);

    std::vector<double> sim_t;
    std::vector<double> emu_t;
    ArrivalGrid arrival;
    for (int r = 0; r < o.repetitions; ++r) {
      const auto start = Clock::now();
      arrival = simulate_arrival(scene, weather, ignition, o.sim.ros, o.sim.fuel);
      sim_t.push_back(seconds_since(start));
    }
    FireSample sample = make_sample(scene, weather, arrival, SampleWindow{0, o.horizon}, m.num_classes);
    sample.id = e.id;
    for (int r = 0; r < o.repetitions; ++r) {
      const auto start = Clock::now();
      const Raster pred = predict(model, sample);
      emu_t.push_back(seconds_since(start));
      if (!pred.allFinite()) throw std::runtime_error(e.id + ": non-finite emulator output");
    }
    BenchScene s{e.id, scene.rows(), scene.cols(), median(sim_t), median(emu_t)};
    log << s.id << " " << s.rows << "x" << s.cols << ": firesim " << s.sim_median_s << " s, emulator "
        << s.emu_median_s << " s\n";
    sim_all.push_back(s.sim_median_s);
    emu_all.push_back(s.emu_median_s);
    report.scenes.push_back(s);
  }
  report.sim_median_s = median(sim_all);
  report.emu_median_s = median(emu_all);
  report.ratio = report.sim_median_s / report.emu_median_s;
  return report;
}

std::string format_bench_report(const BenchReport& r) {
  std::ostringstream out;
  out << "scene,rows,cols,firesim_median_s,emulator_median_s,ratio\n";
  for (const auto& s : r.scenes) {
    out << s.id << ',' << s.rows << ',' << s.cols << ',' << text::format_double(s.sim_median_s) << ','
        << text::format_double(s.emu_median_s) << ',' << text::format_double(s.sim_median_s / s.emu_median_s) << '\n';
  }
  out << "aggregate,,," << text::format_double(r.sim_median_s) << ',' << text::format_double(r.emu_median_s) << ','
      << text::format_double(r.ratio) << '\n';
  out << "reference_ratio=" << kReferenceSpeedup << '\n';
  out << "measured_ratio=" << text::format_double(r.ratio) << '\n';
  return out.str();
}

}  // namespace firemu
