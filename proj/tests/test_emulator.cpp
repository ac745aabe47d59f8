#include "firemu/emulator.hpp"
#include "firemu/firesim.hpp"
#include "firemu/gradcheck.hpp"

#include "test_support.hpp"

#include <cmath>
#include <fstream>

using namespace firemu;
using namespace firemu::testing;
using ::testing::HasSubstr;

namespace {

FireSample simulated_sample(std::uint64_t seed, Eigen::Index size, SampleWindow window = {1, 1}) {
  const Scene scene = generate_scene(seed, std::max<Eigen::Index>(size, 64), std::max<Eigen::Index>(size, 64));
  const WeatherSeries weather = generate_weather(seed, 4);
  const ArrivalGrid arrival = simulate_arrival(scene, weather, generate_ignition(seed, scene), {}, {});
  FireSample s = make_sample(scene, weather, arrival, window);
  if (size < 64) {
    const auto p = active_perimeter(s.initial_fire).front();
    const Eigen::Index r0 = std::clamp<Eigen::Index>(p.row - size / 2, 0, 64 - size);
    const Eigen::Index c0 = std::clamp<Eigen::Index>(p.col - size / 2, 0, 64 - size);
    s = crop_window(s, r0, c0, size, size);
  }
  s.id = "t" + std::to_string(seed);
  return s;
}

Tensor<float> latent_of(const Model& m, const Tensor<float>& x) {
  Tape<float> t(false);
  return t.value(encode(t, m.params, m.config, t.constant(x)));
}

}  // namespace

TEST(Params, DefaultCountsWithinBudget) {
  const Model m = build_model({}, 0);
  EXPECT_EQ(m.params.total_count(), 73156);
  EXPECT_EQ(residual_parameter_count(m), 18496);
  EXPECT_LE(m.params.total_count(), 2 * kReferenceTotalParameters);
  const auto text = describe_parameters(m);
  EXPECT_THAT(text, HasSubstr("21248"));
  EXPECT_THAT(text, HasSubstr("73156"));
}

TEST(Params, SegmentsFollowFormula) {
  const Model m = build_model({}, 0);
  Index sum = 0;
  for (const auto& s : m.params.segments()) {
    const Index c_in = s.name.starts_with("dec_") ? s.weight_shape.n : s.weight_shape.c;
    const Index c_out = s.name.starts_with("dec_") ? s.weight_shape.c : s.weight_shape.n;
    EXPECT_EQ(s.size(), conv_parameter_count(c_in, c_out, s.weight_shape.h)) << s.name;
    sum += s.size();
  }
  EXPECT_EQ(sum, m.params.total_count());
  ParamStore<float> one;
  EXPECT_EQ(one.add("x", {16, 8, 4, 4}, 16).size(), 2064);
  EXPECT_THROW(one.add("x", {1, 1, 1, 1}, 1), std::invalid_argument);
}

TEST(Params, SeedDeterminism) {
  EXPECT_EQ(build_model({}, 5).params.values(), build_model({}, 5).params.values());
  EXPECT_NE(build_model({}, 5).params.values(), build_model({}, 6).params.values());
  EXPECT_TRUE((build_model({}, 5).params.bias("enc_0").array() == 0.0f).all());
}

TEST(Encode, HalvesPerStage) {
  const Model m = build_model({}, 1);
  EXPECT_EQ(latent_of(m, Tensor<float>({1, 4, 256, 256})).shape(), (Shape4{1, 32, 32, 32}));
  EXPECT_EQ(latent_of(m, Tensor<float>({1, 4, 64, 64})).shape(), (Shape4{1, 32, 8, 8}));
  EXPECT_THROW(latent_of(m, Tensor<float>({1, 4, 60, 64})), std::invalid_argument);
}

TEST(Encode, ZeroInputZeroLatent) {
  const Model m = build_model({}, 1);
  EXPECT_TRUE(latent_of(m, Tensor<float>({1, 4, 32, 32})).values().isZero());
}

TEST(Condition, WeatherScalesChannels) {
  Model m = build_model({}, 2);
  m.params.bias("cond_out").setConstant(0.25f);
  m.params.bias("cond_in").setRandom();
  std::mt19937_64 rng(3);
  std::normal_distribution<float> n;
  Tensor<float> latent({1, 32, 4, 4});
  for (Index i = 0; i < latent.size(); ++i) latent.values()[i] = n(rng);
  auto run = [&](const Eigen::Vector3f& w) {
    Tape<float> t(false);
    Tensor<float> wt({1, 3, 1, 1}, Eigen::VectorXf(w));
    return t.value(condition(t, m.params, m.config, t.constant(latent), t.constant(wt)));
  };
  // All-ones weather: the two pointwise convs composed.
  Tape<float> t(false);
  const Var k = ad::conv2d(t, t.constant(latent), t.layer(m.params, "cond_in"), kPointSpec);
  const auto direct = t.value(ad::conv2d(t, k, t.layer(m.params, "cond_out"), kPointSpec));
  EXPECT_TRUE(run(Eigen::Vector3f::Ones()).values().isApprox(direct.values(), 1e-6f));
  // All-zeros weather: bias of cond_out only.
  EXPECT_TRUE((run(Eigen::Vector3f::Zero()).values().array() == 0.25f).all());
  // Linear in each weather scalar.
  const auto base = run({0.0f, 0.3f, -0.2f});
  const auto one = run({1.0f, 0.3f, -0.2f});
  const auto two = run({2.0f, 0.3f, -0.2f});
  EXPECT_TRUE((two.values() - base.values()).isApprox(2.0f * (one.values() - base.values()), 1e-4f));
  Tape<float> bad(false);
  EXPECT_THROW(condition(bad, m.params, m.config, bad.constant(latent), bad.constant(Tensor<float>({1, 2, 1, 1}))),
               std::invalid_argument);
}

TEST(Recurrent, ZeroCellIsIdentity) {
  Model m = build_model({}, 4);
  for (int i = 0; i < m.config.recurrent_convs; ++i) {
    m.params.weights(residual_name(i)).setZero();
    m.params.bias(residual_name(i)).setZero();
  }
  Tensor<float> state({1, 32, 4, 4});
  state.values().setRandom();
  Tensor<float> cond({1, 32, 4, 4});
  cond.values().setRandom();
  Tape<float> t(false);
  const Var out = recurrent_step(t, m.params, m.config, t.constant(state), t.constant(cond));
  EXPECT_EQ(t.value(out).values(), state.values());
}

TEST(Recurrent, NoWeatherStepsSkipsCell) {
  const Model m = build_model({}, 5);
  const FireSample s = simulated_sample(5, 32);
  Tape<float> a(false);
  const Var full = forward(a, m.params, m.config, sample_input<float>(s), WeatherFeatures(0, 3));
  Tape<float> b(false);
  const Var direct = decode(b, m.params, m.config, encode(b, m.params, m.config, b.constant(sample_input<float>(s))));
  EXPECT_EQ(a.value(full).values(), b.value(direct).values());
}

TEST(Recurrent, WeightsSharedAcrossSteps) {
  const Model m = build_model({}, 6);
  const FireSample s = simulated_sample(6, 32);
  WeatherFeatures w(3, 3);
  w.rowwise() = s.weather_seq.row(0);
  Tape<float> t;
  const Var out = forward(t, m.params, m.config, sample_input<float>(s), w);
  EXPECT_EQ(t.bindings().size(), m.params.segments().size());

  // Two identical steps equal the cell applied twice by hand.
  Tape<float> h(false);
  const Var latent = encode(h, m.params, m.config, h.constant(sample_input<float>(s)));
  Tensor<float> wt({1, 3, 1, 1}, Eigen::VectorXf(w.row(0).transpose()));
  const Var cond = condition(h, m.params, m.config, latent, h.constant(wt));
  Var state = recurrent_step(h, m.params, m.config, latent, cond);
  state = recurrent_step(h, m.params, m.config, state, cond);
  state = recurrent_step(h, m.params, m.config, state, cond);
  EXPECT_EQ(h.value(decode(h, m.params, m.config, state)).values(), t.value(out).values());
}

TEST(Decode, DoublesPerStage) {
  const Model m = build_model({}, 7);
  Tape<float> t(false);
  const Var out = decode(t, m.params, m.config, t.constant(Tensor<float>({1, 32, 32, 32})));
  EXPECT_EQ(t.value(out).shape(), (Shape4{1, 1, 256, 256}));
  EXPECT_TRUE(t.value(out).values().isZero());
}

TEST(Predict, ShapeAndDeterminism) {
  const Model m = build_model({}, 8);
  const FireSample s = simulated_sample(8, 64);
  const Raster a = predict(m, s);
  EXPECT_EQ(a.rows(), 64);
  EXPECT_EQ(a.cols(), 64);
  EXPECT_TRUE((a == predict(m, s)).all());
  EXPECT_TRUE(a.allFinite());
}

TEST(Predict, ArbitrarySizes) {
  const Model m = build_model({}, 9);
  for (const Eigen::Index n : {Eigen::Index{320}, Eigen::Index{100}}) {
    const FireSample s = simulated_sample(9, n);
    const Raster p = predict(m, s);
    EXPECT_EQ(p.rows(), n);
    EXPECT_EQ(p.cols(), n);
    EXPECT_TRUE(p.allFinite());
  }
}

TEST(Predict, TranslationEquivariance) {
  const Model m = build_model({}, 10);
  FireSample s = simulated_sample(10, 64);
  // Content far from the canvas edges, shifted by one latent cell (8 pixels).
  const FireSample content = crop_window(s, 16, 16, 32, 32);
  const Raster pa = predict(m, pad_sample(content, 192, 192, 80, 80));
  const Raster pb = predict(m, pad_sample(content, 192, 192, 88, 88));
  const float err = (pa.block(64, 64, 64, 64) - pb.block(72, 72, 64, 64)).abs().maxCoeff();
  EXPECT_LE(err, 1e-5f * std::max(1.0f, pa.abs().maxCoeff()));
}

TEST(Loss, PersistenceIsExactlyZero) {
  const FireSample s = simulated_sample(11, 64);
  EXPECT_EQ(loss_value(s.initial_fire, s.target_fire, s.initial_fire, 1e-6), 0.0);
  Tape<float> t;
  const Var init = t.constant(raster_tensor<float>(s.initial_fire));
  EXPECT_EQ(t.item(loss_fn(t, init, t.constant(raster_tensor<float>(s.target_fire)), init, 1e-6f)), 0.0f);
}

TEST(Loss, PerfectPredictionOracle) {
  Raster target = Raster::Zero(10, 10);
  Raster initial = target;
  // MSE_o = 0.1: ten of a hundred pixels differ by 1.
  for (int i = 0; i < 10; ++i) initial(i, i) = 1.0f;
  EXPECT_NEAR(loss_value(target, target, initial, 1e-6), std::log10(1e-6 / 0.100001), 1e-9);
  EXPECT_LE(loss_value(target, target, initial, 1e-6), -4.0);
  Raster tenth = target;
  tenth(0, 0) = 1.0f;  // MSE_p = 0.01 = MSE_o / 10
  EXPECT_NEAR(loss_value(tenth, target, initial, 1e-12), -1.0, 1e-9);
  EXPECT_THROW(loss_value(target, target, initial, 0.0), std::invalid_argument);
}

TEST(GradCheck, FullModelOn32x32) {
  const Model m = build_model({}, 12);
  const ParamStore<double> p = m.params.cast<double>();
  FireSample s = simulated_sample(12, 32, {1, 2});
  GradCheckOptions opts;
  opts.per_segment = 12;
  const auto report = grad_check(
      [&](Tape<double>& t, const ParamStore<double>& ps) { return sample_loss(t, ps, m.config, s, 1e-6); }, p, opts);
  EXPECT_TRUE(report.passed) << "max rel " << report.max_relative_error << " at " << report.worst_coordinate
                             << ", skipped " << report.skipped_kinks;
  EXPECT_GE(report.checked, 100);
}

TEST(Training, ZeroLearningRateLeavesParameters) {
  std::vector<FireSample> data{simulated_sample(13, 64), simulated_sample(14, 64), simulated_sample(15, 64)};
  Model m = build_model({}, 1);
  const auto before = m.params.values();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.crop_size = 32;
  cfg.lr = 0.0f;
  train_on_split(m, data, {{0, 1}, {2}}, cfg);
  EXPECT_EQ(m.params.values(), before);
}

TEST(Training, DeterministicHistoryAndProgress) {
  std::vector<FireSample> data;
  for (std::uint64_t i = 0; i < 6; ++i) data.push_back(simulated_sample(20 + i, 64));
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 4;
  cfg.crop_size = 32;
  cfg.seed = 4;
  const auto a = train(data, {}, cfg);
  const auto b = train(data, {}, cfg);
  ASSERT_EQ(a.history.epochs.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(a.history.epochs[i].train_loss, b.history.epochs[i].train_loss);
    EXPECT_EQ(a.history.epochs[i].val_loss, b.history.epochs[i].val_loss);
  }
  EXPECT_EQ(a.model.params.values(), b.model.params.values());
  EXPECT_LT(a.history.epochs.back().train_loss, a.history.epochs.front().train_loss);
}

TEST(Training, SplitKeepsBothSides) {
  const auto s = split_dataset(2, 0.2, 0);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  const auto big = split_dataset(200, 0.2, 3);
  EXPECT_EQ(big.test.size(), 40u);
  EXPECT_EQ(big.train.size(), 160u);
  EXPECT_THROW(split_dataset(1, 0.2, 0), std::invalid_argument);
  TrainConfig bad;
  bad.test_split = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Training, DivergenceAborts) {
  Model m = build_model({}, 1);
  m.params.values()[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  Trainer trainer(m, cfg);
  const auto msg = error_of([&] { trainer.step({simulated_sample(30, 32)}); });
  EXPECT_THAT(msg, HasSubstr("training diverged"));
}

TEST(ModelFile, RoundTripBitIdentical) {
  const auto dir = scratch_dir();
  const Model m = build_model({}, 42);
  save_model(m, dir / "m.femu");
  const Model back = load_model(dir / "m.femu");
  EXPECT_EQ(back.config, m.config);
  EXPECT_EQ(std::memcmp(back.params.values().data(), m.params.values().data(), sizeof(float) * m.params.total_count()),
            0);
  const auto bytes = read_text_file(dir / "m.femu");
  EXPECT_EQ(bytes.substr(0, 4), "FEMU");
  std::uint32_t header_len = 0;
  for (int i = 0; i < 4; ++i) header_len |= std::uint32_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  EXPECT_EQ(bytes.size() - 12 - header_len, std::size_t(m.params.total_count()) * 4);
}

TEST(ModelFile, CorruptFilesRejected) {
  const auto dir = scratch_dir();
  save_model(build_model({}, 1), dir / "m.femu");
  const auto bytes = read_text_file(dir / "m.femu");
  write_text_file(dir / "t.femu", bytes.substr(0, bytes.size() - 10));
  EXPECT_THAT(error_of([&] { load_model(dir / "t.femu"); }), HasSubstr("truncated file"));
  write_text_file(dir / "h.femu", bytes.substr(0, 20));
  EXPECT_THAT(error_of([&] { load_model(dir / "h.femu"); }), HasSubstr("truncated file"));
  std::string magic = bytes;
  magic[0] = 'X';
  write_text_file(dir / "b.femu", magic);
  EXPECT_THAT(error_of([&] { load_model(dir / "b.femu"); }), HasSubstr("bad magic"));
  std::string version = bytes;
  version[4] = 9;
  write_text_file(dir / "v.femu", version);
  EXPECT_THAT(error_of([&] { load_model(dir / "v.femu"); }), HasSubstr("version mismatch"));
  write_text_file(dir / "x.femu", bytes + "xyzw");
  EXPECT_THAT(error_of([&] { load_model(dir / "x.femu"); }), HasSubstr("trailing bytes"));
}

TEST(TrainConfigFile, RoundTrip) {
  const auto dir = scratch_dir();
  TrainConfig c;
  c.epochs = 7;
  c.lr = 3e-4f;
  c.augment = false;
  write_train_config(c, dir / "t.cfg");
  const auto back = read_train_config(dir / "t.cfg");
  EXPECT_EQ(back.epochs, 7);
  EXPECT_EQ(back.lr, 3e-4f);
  EXPECT_FALSE(back.augment);
}
