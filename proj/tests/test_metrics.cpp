#include "firemu/firesim.hpp"
#include "firemu/metrics.hpp"

#include "test_support.hpp"

#include <random>

using namespace firemu;
using namespace firemu::testing;

namespace {

BurnMask mask_with(Eigen::Index n, const std::vector<Eigen::Index>& on) {
  BurnMask m{BoolRaster::Constant(1, n, false)};
  for (const auto i : on) m.burned(0, i) = true;
  return m;
}

std::vector<Eigen::Index> range(Eigen::Index a, Eigen::Index b) {
  std::vector<Eigen::Index> v;
  for (Eigen::Index i = a; i < b; ++i) v.push_back(i);
  return v;
}

FireSample small_sample(std::uint64_t seed) {
  const Scene scene = generate_scene(seed, 64, 64);
  const WeatherSeries weather = generate_weather(seed, 3);
  FireSample s =
      make_sample(scene, weather, simulate_arrival(scene, weather, generate_ignition(seed, scene), {}, {}), {1, 2});
  s.id = "m" + std::to_string(seed);
  return s;
}

}  // namespace

TEST(BurnedMask, Threshold) {
  Raster f(1, 4);
  f << 0.0f, 0.99f, 1.25f, 1.5f;
  const auto m = burned_mask(f);
  EXPECT_TRUE(m.burned(0, 0));
  EXPECT_TRUE(m.burned(0, 1));
  EXPECT_FALSE(m.burned(0, 2));
  EXPECT_FALSE(m.burned(0, 3));
  EXPECT_EQ(burned_mask(Raster::Constant(3, 3, kUnburnedCode)).count(), 0);
}

TEST(BurnedMask, MatchesFiniteArrivalWithinHorizon) {
  const Scene scene = generate_scene(2, 64, 64);
  const WeatherSeries weather = generate_weather(2, 4);
  const ArrivalGrid a = simulate_arrival(scene, weather, generate_ignition(2, scene), {}, {});
  const FireSample s = make_sample(scene, weather, a, {1, 2});
  const Raster t = arrival_in_intervals(a, 30.0f);
  EXPECT_TRUE((burned_mask(s.target_fire).burned == (t <= 3.0f)).all());
}

TEST(Jaccard, Cases) {
  const auto a = mask_with(300, range(0, 100));
  EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(a, mask_with(300, range(100, 200))), 0.0);
  const auto b = mask_with(300, range(50, 150));
  EXPECT_DOUBLE_EQ(jaccard(a, b), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard(mask_with(4, {}), mask_with(4, {})), 1.0);
  EXPECT_THROW(jaccard(a, mask_with(5, {})), std::invalid_argument);
}

TEST(Dice, Cases) {
  const auto a = mask_with(300, range(0, 100));
  EXPECT_DOUBLE_EQ(dice(a, a), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, mask_with(300, range(100, 200))), 0.0);
  EXPECT_DOUBLE_EQ(dice(a, mask_with(300, range(50, 150))), 0.5);
  EXPECT_DOUBLE_EQ(dice(mask_with(4, {}), mask_with(4, {})), 1.0);
  EXPECT_THROW(dice(a, mask_with(5, {})), std::invalid_argument);
}

TEST(Scores, IdentitySymmetryMonotonicity) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 200; ++trial) {
    BurnMask a{BoolRaster(8, 8)};
    BurnMask b{BoolRaster(8, 8)};
    for (Eigen::Index i = 0; i < 64; ++i) {
      a.burned.data()[i] = coin(rng);
      b.burned.data()[i] = coin(rng);
    }
    const double j = jaccard(a, b);
    EXPECT_NEAR(dice(a, b), 2 * j / (1 + j), 1e-12);
    EXPECT_EQ(j, jaccard(b, a));
    EXPECT_EQ(dice(a, b), dice(b, a));
    // Burning one more pixel in both masks grows the intersection.
    for (Eigen::Index i = 0; i < 64; ++i) {
      if (!(a.burned.data()[i] && b.burned.data()[i])) {
        BurnMask a2 = a;
        BurnMask b2 = b;
        a2.burned.data()[i] = b2.burned.data()[i] = true;
        EXPECT_GE(jaccard(a2, b2), j);
        EXPECT_GE(dice(a2, b2), dice(a, b));
        break;
      }
    }
  }
}

TEST(DifferenceMap, SignConvention) {
  Raster pred(1, 3);
  Raster target(1, 3);
  pred << 0.2f, 1.5f, 0.4f;
  target << 0.7f, 1.0f, 0.4f;
  const Raster d = difference_map(pred, target);
  EXPECT_NEAR(d(0, 0), 0.5f, 1e-6f);
  EXPECT_NEAR(d(0, 1), -0.5f, 1e-6f);
  EXPECT_EQ(d(0, 2), 0.0f);
  Raster wild(1, 3);
  wild << -5.0f, 9.0f, 0.4f;
  const Raster c = difference_map(wild, target);
  EXPECT_EQ(c(0, 0), 1.5f);
  EXPECT_EQ(c(0, 1), -1.5f);
  EXPECT_THROW(difference_map(pred, Raster::Zero(2, 2)), std::invalid_argument);
}

TEST(Evaluate, OracleAndPersistence) {
  const std::vector<FireSample> samples{small_sample(3), small_sample(4)};
  const auto oracle = evaluate_dataset([](const FireSample& s) { return Raster(s.target_fire); }, samples);
  EXPECT_EQ(oracle.count, 2u);
  EXPECT_DOUBLE_EQ(oracle.jaccard, 1.0);
  EXPECT_DOUBLE_EQ(oracle.dice, 1.0);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& s = samples[i];
    const double mse_o = (s.initial_fire - s.target_fire).cast<double>().square().mean();
    EXPECT_NEAR(oracle.samples[i].loss, std::log10(1e-6 / (mse_o + 1e-6)), 1e-9);
  }
  const auto persistence = evaluate_dataset(persistence_prediction, samples);
  for (const auto& m : persistence.samples) EXPECT_EQ(m.loss, 0.0);
  EXPECT_EQ(persistence.loss, 0.0);
  EXPECT_THROW(evaluate_dataset(persistence_prediction, {}), std::invalid_argument);
}

TEST(Evaluate, ReportFormats) {
  const std::vector<FireSample> samples{small_sample(5)};
  const auto r = evaluate_dataset(persistence_prediction, samples);
  const auto kv = parse_key_value_text(format_report_key_value(r));
  EXPECT_EQ(kv.front().get_int("count"), 1);
  EXPECT_EQ(kv.front().get_double("loss"), 0.0);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[1].get("id"), "m5");
  EXPECT_NE(format_report_text(r).find("m5"), std::string::npos);
}
