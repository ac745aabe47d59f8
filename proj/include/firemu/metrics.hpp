#ifndef FIREMU_METRICS_HPP
#define FIREMU_METRICS_HPP

#include "firemu/emulator.hpp"
#include "firemu/grids.hpp"
#include "firemu/preprocess.hpp"

#include <string>
#include <vector>

namespace firemu {

/// Midpoint between the latest in-horizon code (1.0) and the unburned code (1.5).
inline constexpr float kBurnThreshold = 1.25f;

using BoolRaster = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BurnMask {
  BoolRaster burned;

  Eigen::Index rows() const { return burned.rows(); }
  Eigen::Index cols() const { return burned.cols(); }
  Eigen::Index count() const { return burned.count(); }
};

BurnMask burned_mask(const Raster& fire, float threshold = kBurnThreshold);

/// |a and b| / |a or b|; 1 when both masks are empty.
double jaccard(const BurnMask& a, const BurnMask& b);
/// 2|a and b| / (|a| + |b|); 1 when both masks are empty.
double dice(const BurnMask& a, const BurnMask& b);

/// target - pred, clamped to [-1.5, 1.5]. Positive where the prediction burns
/// earlier than the target (false-positive spread), negative where later.
Raster difference_map(const Raster& pred, const Raster& target);

struct SampleMetrics {
  std::string id;
  double loss = 0.0;
  double jaccard = 0.0;
  double dice = 0.0;
};

/// Aggregates are unweighted means over samples.
struct MetricsReport {
  std::vector<SampleMetrics> samples;
  double loss = 0.0;
  double jaccard = 0.0;
  double dice = 0.0;
  std::size_t count = 0;
};

MetricsReport evaluate_dataset(const Predictor& predictor, const std::vector<FireSample>& samples, double tau = 1e-6);
MetricsReport evaluate_dataset(const Model& model, const std::vector<FireSample>& samples, double tau = 1e-6);

std::string format_report_text(const MetricsReport& report);
std::string format_report_key_value(const MetricsReport& report);

}  // namespace firemu

#endif  // FIREMU_METRICS_HPP
