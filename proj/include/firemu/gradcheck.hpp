#ifndef FIREMU_GRADCHECK_HPP
#define FIREMU_GRADCHECK_HPP

#include "firemu/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace firemu {

struct GradCheckOptions {
  double epsilon = 1e-4;
  double tolerance = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, denominator_floor).
  double denominator_floor = 1e-6;
  /// Coordinates sampled per parameter segment; 0 checks every coordinate.
  Index per_segment = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  Index worst_coordinate = -1;
  Index checked = 0;
  Index skipped_kinks = 0;
  bool passed = false;
};

/// What a replayed evaluation reports: the scalar and the relu sign pattern.
struct Evaluation {
  double value = 0.0;
  std::uint64_t relu_signature = 0;
};

namespace detail {

inline std::vector<Index> coordinates_to_check(const ParamStore<double>& params, const GradCheckOptions& options) {
  std::vector<Index> coords;
  std::mt19937_64 rng(options.seed);
  for (const auto& s : params.segments()) {
    std::vector<Index> all(static_cast<std::size_t>(s.size()));
    std::iota(all.begin(), all.end(), s.offset);
    if (options.per_segment > 0 && s.size() > options.per_segment) {
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(static_cast<std::size_t>(options.per_segment));
      std::sort(all.begin(), all.end());
    }
    coords.insert(coords.end(), all.begin(), all.end());
  }
  return coords;
}

}  // namespace detail

/// Central differences of `evaluate` against `analytic`. Coordinates whose
/// perturbation flips any relu input sign straddle a kink and are skipped.
template <typename Evaluate>
GradCheckReport compare_gradients(Evaluate&& evaluate, const Eigen::VectorXd& analytic, ParamStore<double> params,
                                  const GradCheckOptions& options = {}) {
  GradCheckReport report;
  const Evaluation base = evaluate(params);
  for (const Index i : detail::coordinates_to_check(params, options)) {
    const double original = params.values()[i];
    params.values()[i] = original + options.epsilon;
    const Evaluation plus = evaluate(params);
    params.values()[i] = original - options.epsilon;
    const Evaluation minus = evaluate(params);
    params.values()[i] = original;
    if (plus.relu_signature != base.relu_signature || minus.relu_signature != base.relu_signature) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus.value - minus.value) / (2.0 * options.epsilon);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.checked;
    if (report.worst_coordinate < 0 || rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_coordinate = i;
    }
  }
  report.passed = report.checked > 0 && report.max_relative_error < options.tolerance;
  return report;
}

/// Finite-difference check of a tape computation in 64-bit arithmetic.
template <typename Computation>
GradCheckReport grad_check(Computation&& computation, const ParamStore<double>& params,
                           const GradCheckOptions& options = {}) {
  Tape<double> tape(true, true);
  const Var out = computation(tape, params);
  tape.backward(out);
  const Eigen::VectorXd analytic = tape.parameter_gradient(params);
  auto evaluate = [&](const ParamStore<double>& p) {
    Tape<double> replay(false, true);
    const Var v = computation(replay, p);
    return Evaluation{replay.item(v), replay.relu_signature()};
  };
  return compare_gradients(evaluate, analytic, params, options);
}

}  // namespace firemu

#endif  // FIREMU_GRADCHECK_HPP
