#include "firemu/commands.hpp"
#include "firemu/keyvalue.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace firemu;

/// Values in the config file replace whatever the flags set.
void apply_config(const std::string& path, TrainConfig& train, PerturbationSpec& spec, double& level, double& tau) {
  if (path.empty()) return;
  train = read_train_config(path, train);
  const auto& kv = read_key_value_file(path).front();
  spec.n_members = static_cast<int>(kv.get_int_or("members", spec.n_members));
  spec.sigma_speed = static_cast<float>(kv.get_double_or("sigma_speed", spec.sigma_speed));
  spec.sigma_dir = static_cast<float>(kv.get_double_or("sigma_dir", spec.sigma_dir));
  spec.sigma_temp = static_cast<float>(kv.get_double_or("sigma_temp", spec.sigma_temp));
  spec.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", static_cast<long long>(spec.seed)));
  level = kv.get_double_or("level", level);
  tau = kv.get_double_or("tau", tau);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"firemu: fire-spread simulator and neural emulator"};
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string manifest;
  std::string model;
  std::string sample;
  std::string split = "test";
  bool deterministic = true;
  TrainConfig train;
  PerturbationSpec spec;
  double level = 0.5;
  double tau = 1e-6;

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Write synthetic scenes, weather and ignitions");
  g->add_option("--seed", seed, "Random seed");
  g->add_option("--count", gen.count, "Number of fires")->check(CLI::PositiveNumber);
  g->add_option("--rows", gen.rows, "Raster rows");
  g->add_option("--cols", gen.cols, "Raster columns");
  g->add_option("--intervals", gen.intervals, "Weather intervals per fire");
  g->add_option("--split", gen.test_split, "Held-out fraction");
  g->add_option("--out", out, "Output directory")->required();

  std::string sim_config;
  auto* s = app.add_subcommand("simulate", "Compute arrival grids for every sample of a manifest");
  s->add_option("manifest", manifest)->required();
  s->add_option("--config", sim_config, "Simulator parameter file");

  auto* t = app.add_subcommand("train", "Train the emulator");
  t->add_option("manifest", manifest)->required();
  t->add_option("--out", out, "Model file")->required();
  t->add_option("--seed", train.seed);
  t->add_option("--epochs", train.epochs);
  t->add_option("--batch-size", train.batch_size);
  t->add_option("--crop", train.crop_size, "Crop size (0 = none)");
  t->add_option("--split", train.test_split);
  t->add_option("--tau", train.tau);
  t->add_flag("--deterministic,!--no-deterministic", deterministic);
  t->add_option("--config", config, "Key=value file overriding flags");

  auto* p = app.add_subcommand("predict", "Predict one sample");
  p->add_option("model", model)->required();
  p->add_option("manifest", manifest)->required();
  p->add_option("--sample", sample)->required();
  p->add_option("--out", out)->required();

  bool persistence = false;
  auto* e = app.add_subcommand("evaluate", "Loss, Jaccard and Dice over a split");
  e->add_option("manifest", manifest)->required();
  e->add_option("--model", model);
  e->add_flag("--persistence", persistence, "Score the persistence baseline");
  e->add_option("--split", split, "train, test or all");
  e->add_option("--tau", tau);
  e->add_option("--out", out);
  e->add_option("--config", config);

  auto* en = app.add_subcommand("ensemble", "Weather-perturbation ensemble for one sample");
  en->add_option("model", model)->required();
  en->add_option("manifest", manifest)->required();
  en->add_option("--sample", sample)->required();
  en->add_option("--seed", spec.seed);
  en->add_option("--members", spec.n_members);
  en->add_option("--sigma-speed", spec.sigma_speed);
  en->add_option("--sigma-dir", spec.sigma_dir);
  en->add_option("--sigma-temp", spec.sigma_temp);
  en->add_option("--level", level);
  en->add_flag("--deterministic,!--no-deterministic", deterministic);
  en->add_option("--out", out)->required();
  en->add_option("--config", config);

  BenchOptions bench;
  std::string bench_model;
  auto* b = app.add_subcommand("bench", "Median wall clock of firesim vs emulator");
  b->add_option("manifest", manifest)->required();
  b->add_option("--model", bench_model);
  b->add_option("--reps", bench.repetitions);
  b->add_option("--scenes", bench.scenes);
  b->add_option("--horizon", bench.horizon);
  b->add_option("--out", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) {
      gen.seed = seed;
      gen.out = out;
      cmd_generate(gen, std::cout);
      return 0;
    }
    if (*s) {
      const SimConfig cfg = sim_config.empty() ? SimConfig{} : read_sim_config(sim_config);
      return cmd_simulate(manifest, cfg, std::cout).failures.empty() ? 0 : 1;
    }
    apply_config(config, train, spec, level, tau);
    if (*t) {
      train.deterministic = deterministic;
      cmd_train({manifest, out, train, ModelConfig{}}, std::cout);
    } else if (*p) {
      cmd_predict(model, manifest, sample, out, std::cout);
    } else if (*e) {
      if (persistence == !model.empty()) {
        std::cerr << "evaluate: give exactly one of --model or --persistence\n";
        return 2;
      }
      EvaluateOptions opts{manifest, {}, split, tau, out};
      if (!persistence) opts.model = model;
      cmd_evaluate(opts, std::cout);
    } else if (*en) {
      cmd_ensemble({model, manifest, sample, spec, level, out}, std::cout);
    } else if (*b) {
      bench.model = bench_model;
      bench.manifest = manifest;
      const auto report = format_bench_report(cmd_bench(bench, std::cerr));
      std::cout << report;
      if (!out.empty()) write_text_file(out, report);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
