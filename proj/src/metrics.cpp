#include "firemu/metrics.hpp"

#include "firemu/text.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace firemu {

namespace {

void require_same_dims(Eigen::Index r1, Eigen::Index c1, Eigen::Index r2, Eigen::Index c2, const char* what) {
  if (r1 != r2 || c1 != c2) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

BurnMask burned_mask(const Raster& fire, float threshold) { return {fire < threshold}; }

double jaccard(const BurnMask& a, const BurnMask& b) {
  require_same_dims(a.rows(), a.cols(), b.rows(), b.cols(), "jaccard");
  const auto inter = (a.burned && b.burned).count();
  const auto uni = (a.burned || b.burned).count();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double dice(const BurnMask& a, const BurnMask& b) {
  require_same_dims(a.rows(), a.cols(), b.rows(), b.cols(), "dice");
  const auto inter = (a.burned && b.burned).count();
  const auto total = a.count() + b.count();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

Raster difference_map(const Raster& pred, const Raster& target) {
  require_same_dims(pred.rows(), pred.cols(), target.rows(), target.cols(), "difference_map");
  return (target - pred).cwiseMax(-kUnburnedCode).cwiseMin(kUnburnedCode);
}

MetricsReport evaluate_dataset(const Predictor& predictor, const std::vector<FireSample>& samples, double tau) {
  if (samples.empty()) throw std::invalid_argument("evaluation set is empty");
  MetricsReport report;
  for (const auto& s : samples) {
    const Raster pred = predictor(s);
    const auto pm = burned_mask(pred);
    const auto tm = burned_mask(s.target_fire);
    report.samples.push_back({s.id, loss_value(pred, s.target_fire, s.initial_fire, tau), jaccard(pm, tm), dice(pm, tm)});
  }
  for (const auto& m : report.samples) {
    report.loss += m.loss;
    report.jaccard += m.jaccard;
    report.dice += m.dice;
  }
  report.count = report.samples.size();
  const auto n = static_cast<double>(report.count);
  report.loss /= n;
  report.jaccard /= n;
  report.dice /= n;
  return report;
}

MetricsReport evaluate_dataset(const Model& model, const std::vector<FireSample>& samples, double tau) {
  return evaluate_dataset(model_predictor(model), samples, tau);
}

std::string format_report_text(const MetricsReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "sample" << std::right << std::setw(10) << "loss" << std::setw(10) << "jaccard"
      << std::setw(10) << "dice" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& m : report.samples) {
    out << std::left << std::setw(16) << m.id << std::right << std::setw(10) << m.loss << std::setw(10) << m.jaccard
        << std::setw(10) << m.dice << '\n';
  }
  out << std::left << std::setw(16) << "mean" << std::right << std::setw(10) << report.loss << std::setw(10)
      << report.jaccard << std::setw(10) << report.dice << '\n';
  out << "samples: " << report.count << '\n';
  return out.str();
}

std::string format_report_key_value(const MetricsReport& report) {
  std::ostringstream out;
  out << "count=" << report.count << '\n'
      << "loss=" << text::format_double(report.loss) << '\n'
      << "jaccard=" << text::format_double(report.jaccard) << '\n'
      << "dice=" << text::format_double(report.dice) << '\n';
  for (const auto& m : report.samples) {
    out << "\n[sample]\nid=" << m.id << "\nloss=" << text::format_double(m.loss)
        << "\njaccard=" << text::format_double(m.jaccard) << "\ndice=" << text::format_double(m.dice) << '\n';
  }
  return out.str();
}

}  // namespace firemu
