#include "firemu/adam.hpp"
#include "firemu/tensor.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace firemu;

namespace {

template <typename Scalar>
Tensor<Scalar> random_tensor(const Shape4& s, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<Scalar> t(s);
  for (Index i = 0; i < t.size(); ++i) t.values()[i] = static_cast<Scalar>(n(rng));
  return t;
}

Tensor<float> zeros_bias(Index c) { return Tensor<float>({1, c, 1, 1}); }

}  // namespace

TEST(Conv2d, IdentityKernelReturnsInput) {
  std::mt19937_64 rng(1);
  const auto x = random_tensor<float>({1, 1, 5, 7}, rng);
  const Tensor<float> w({1, 1, 1, 1}, 1.0f);
  const auto y = conv2d(x, w, zeros_bias(1), {1, 1, 0});
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(y.values(), x.values());
}

TEST(Conv2d, HandSumOfTwoByTwo) {
  Tensor<float> x({1, 1, 2, 2});
  x.values() << 1, 2, 3, 4;
  const Tensor<float> w({1, 1, 2, 2}, 1.0f);
  const auto y = conv2d(x, w, zeros_bias(1), {2, 1, 0});
  ASSERT_EQ(y.shape(), (Shape4{1, 1, 1, 1}));
  EXPECT_FLOAT_EQ(y.values()[0], 10.0f);
}

TEST(Conv2d, OutputSizes) {
  EXPECT_EQ(conv_output_size(256, {4, 2, 1}), 128);
  EXPECT_EQ(conv_output_size(64, {3, 1, 1}), 64);
  EXPECT_EQ(conv_transpose_output_size(128, {4, 2, 1}), 256);
  EXPECT_THROW(conv_output_size(8, {4, 0, 1}), std::invalid_argument);
}

TEST(Conv2d, StridedShapeAndMismatchErrors) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor<float>({2, 3, 16, 16}, rng);
  const auto w = random_tensor<float>({5, 3, 4, 4}, rng);
  EXPECT_EQ(conv2d(x, w, zeros_bias(5), {4, 2, 1}).shape(), (Shape4{2, 5, 8, 8}));
  const auto bad = random_tensor<float>({5, 2, 4, 4}, rng);
  EXPECT_THROW(conv2d(x, bad, zeros_bias(5), {4, 2, 1}), std::invalid_argument);
  EXPECT_THROW(conv2d(x, w, zeros_bias(4), {4, 2, 1}), std::invalid_argument);
}

TEST(Conv2d, BruteForceAgreement) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor<double>({1, 2, 7, 6}, rng);
  const auto w = random_tensor<double>({3, 2, 3, 3}, rng);
  const auto b = random_tensor<double>({1, 3, 1, 1}, rng);
  const ConvSpec spec{3, 2, 1};
  const auto y = conv2d(x, w, b, spec);
  for (Index o = 0; o < 3; ++o) {
    for (Index r = 0; r < y.shape().h; ++r) {
      for (Index c = 0; c < y.shape().w; ++c) {
        double acc = b.values()[o];
        for (Index i = 0; i < 2; ++i) {
          for (Index kr = 0; kr < 3; ++kr) {
            for (Index kc = 0; kc < 3; ++kc) {
              const Index rr = r * 2 - 1 + kr;
              const Index cc = c * 2 - 1 + kc;
              if (rr < 0 || cc < 0 || rr >= 7 || cc >= 6) continue;
              acc += w(o, i, kr, kc) * x(0, i, rr, cc);
            }
          }
        }
        EXPECT_NEAR(y(0, o, r, c), acc, 1e-12);
      }
    }
  }
}

TEST(Conv2d, TranslationEquivariance) {
  std::mt19937_64 rng(4);
  Tensor<double> x({1, 1, 32, 32});
  Tensor<double> shifted({1, 1, 32, 32});
  std::normal_distribution<double> n;
  for (Index r = 10; r < 18; ++r) {
    for (Index c = 10; c < 18; ++c) {
      x(0, 0, r, c) = n(rng);
      shifted(0, 0, r + 2, c + 2) = x(0, 0, r, c);
    }
  }
  const auto w = random_tensor<double>({2, 1, 4, 4}, rng);
  const Tensor<double> b({1, 2, 1, 1});
  const auto y = conv2d(x, w, b, {4, 2, 1});
  const auto ys = conv2d(shifted, w, b, {4, 2, 1});
  for (Index o = 0; o < 2; ++o) {
    for (Index r = 0; r + 1 < 16; ++r) {
      for (Index c = 0; c + 1 < 16; ++c) EXPECT_EQ(ys(0, o, r + 1, c + 1), y(0, o, r, c));
    }
  }
}

TEST(Conv2dTranspose, SinglePixelReproducesKernel) {
  Tensor<float> x({1, 1, 1, 1}, 3.0f);
  Tensor<float> w({1, 1, 2, 2});
  w.values() << 1, 2, 3, 4;
  const auto y = conv2d_transpose(x, w, zeros_bias(1), {2, 1, 0});
  ASSERT_EQ(y.shape(), (Shape4{1, 1, 2, 2}));
  EXPECT_EQ(y.values(), (w.values() * 3.0f).eval());
}

TEST(Conv2dTranspose, ZeroInputGivesBias) {
  const Tensor<float> x({1, 2, 4, 4});
  std::mt19937_64 rng(5);
  const auto w = random_tensor<float>({2, 3, 4, 4}, rng);
  Tensor<float> b({1, 3, 1, 1});
  b.values() << 0.5f, -1.0f, 2.0f;
  const auto y = conv2d_transpose(x, w, b, {4, 2, 1});
  ASSERT_EQ(y.shape(), (Shape4{1, 3, 8, 8}));
  for (Index c = 0; c < 3; ++c) EXPECT_TRUE((y.image(0).row(c).array() == b.values()[c]).all());
}

TEST(Conv2dTranspose, DoublesSpatialSize) {
  std::mt19937_64 rng(6);
  const auto x = random_tensor<float>({1, 2, 128, 128}, rng);
  const auto w = random_tensor<float>({2, 1, 4, 4}, rng);
  EXPECT_EQ(conv2d_transpose(x, w, zeros_bias(1), {4, 2, 1}).shape(), (Shape4{1, 1, 256, 256}));
}

TEST(Conv2dTranspose, AdjointOfConv) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4);
  const ConvSpec specs[] = {{4, 2, 1}, {3, 1, 1}, {1, 1, 0}, {2, 2, 0}};
  for (int trial = 0; trial < 25; ++trial) {
    const ConvSpec spec = specs[trial % 4];
    const Index ci = dim(rng);
    const Index co = dim(rng);
    const Index h = 2 * dim(rng) + 2;
    const Index w = 2 * dim(rng) + 2;
    const auto x = random_tensor<double>({1, ci, h, w}, rng);
    const auto k = random_tensor<double>({co, ci, spec.kernel, spec.kernel}, rng);
    const Tensor<double> bo({1, co, 1, 1});
    const Tensor<double> bi({1, ci, 1, 1});
    const auto y = conv2d(x, k, bo, spec);
    const auto v = random_tensor<double>(y.shape(), rng);
    const auto back = conv2d_transpose(v, k, bi, spec);
    ASSERT_EQ(back.shape(), x.shape());
    const double lhs = inner_product(y, v);
    const double rhs = inner_product(x, back);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Conv2d, ParameterCountFormula) {
  EXPECT_EQ(conv_parameter_count(8, 16, 4), 2064);
  EXPECT_EQ(conv_parameter_count(32, 3, 1), 99);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Eigen::VectorXf p = Eigen::VectorXf::LinSpaced(5, -1.0f, 1.0f);
  const Eigen::VectorXf before = p;
  AdamState<float> st(5, 1e-3f);
  adam_step(p, Eigen::VectorXf::Zero(5).eval(), st);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMagnitude) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  AdamState<double> st(1, 1e-3);
  adam_step(p, Eigen::VectorXd::Ones(1).eval(), st);
  EXPECT_NEAR(p[0], -1e-3 / (1.0 + 1e-8), 1e-18);
  EXPECT_NEAR(p[0], -9.99999995e-4, 1e-8 * 9.99999995e-4);
}

TEST(Adam, RepeatedPositiveGradientDecreases) {
  Eigen::VectorXf p = Eigen::VectorXf::Zero(1);
  AdamState<float> st(1, 1e-3f);
  const Eigen::VectorXf g = Eigen::VectorXf::Ones(1);
  adam_step(p, g, st);
  const float first = p[0];
  adam_step(p, g, st);
  EXPECT_LT(first, 0.0f);
  EXPECT_LT(p[0], first);
}

TEST(Adam, LengthMismatchThrows) {
  Eigen::VectorXf p = Eigen::VectorXf::Zero(3);
  AdamState<float> st(3, 1e-3f);
  EXPECT_THROW(adam_step(p, Eigen::VectorXf::Zero(2).eval(), st), std::invalid_argument);
}
