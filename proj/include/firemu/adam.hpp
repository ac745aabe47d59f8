#ifndef FIREMU_ADAM_HPP
#define FIREMU_ADAM_HPP

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace firemu {

template <typename Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Eigen::Index step = 0;
  Vector m;
  Vector v;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  AdamState() = default;
  explicit AdamState(Eigen::Index count, Scalar learning_rate = Scalar(1e-3))
      : m(Vector::Zero(count)), v(Vector::Zero(count)), lr(learning_rate) {}
};

/// Bias-corrected ADAM update of `params` in place.
template <typename Scalar, typename Derived>
void adam_step(Eigen::MatrixBase<Derived>& params, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grads,
               AdamState<Scalar>& state) {
  if (params.size() != grads.size() || state.m.size() != grads.size() || state.v.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state lengths differ");
  }
  ++state.step;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const auto t = static_cast<Scalar>(state.step);
  const Scalar m_corr = Scalar(1) / (Scalar(1) - std::pow(state.beta1, t));
  const Scalar v_corr = Scalar(1) / (Scalar(1) - std::pow(state.beta2, t));
  params.derived().array() -=
      state.lr * (state.m.array() * m_corr) / ((state.v.array() * v_corr).sqrt() + state.epsilon);
}

}  // namespace firemu

#endif  // FIREMU_ADAM_HPP
