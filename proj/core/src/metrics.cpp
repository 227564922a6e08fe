#include "radfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace radfuse {

MetricsReport compute_metrics(const DepthImage& pred, const DepthImage& gt, double range_cap,
                              MissingPrediction missing) {
  require_same_shape(pred, gt, "prediction vs ground truth");
  require(range_cap > 0.0, ErrorCategory::kParameter, "range cap must be > 0");
  double abs_sum = 0.0, sq_sum = 0.0, iabs_sum = 0.0, isq_sum = 0.0, rel_sum = 0.0, sqrel_sum = 0.0;
  std::size_t n = 0, eligible = 0, inliers = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i)) continue;
    const double g = gt.at(i);
    if (!(g > 0.0 && g <= range_cap)) continue;
    ++eligible;
    double p = 0.0;
    double ip = 0.0;
    if (pred.valid(i) && pred.at(i) > 0.0) {
      p = pred.at(i);
      ip = 1.0 / p;
    } else if (missing == MissingPrediction::kExclude) {
      continue;
    }
    const double err = p - g;
    const double ierr = ip - 1.0 / g;
    abs_sum += std::abs(err);
    sq_sum += err * err;
    iabs_sum += std::abs(ierr);
    isq_sum += ierr * ierr;
    rel_sum += std::abs(err) / g;
    sqrel_sum += err * err / g;
    if (p > 0.0 && std::max(p / g, g / p) < kDeltaThreshold) ++inliers;
    ++n;
  }
  if (n == 0) fail(ErrorCategory::kUndefined, "compute_metrics: empty evaluation set");
  const double dn = static_cast<double>(n);
  MetricsReport m;
  m.mae = abs_sum / dn * kMillimetersPerMeter;
  m.rmse = std::sqrt(sq_sum / dn) * kMillimetersPerMeter;
  m.imae = iabs_sum / dn * kInversePerKilometerPerInverseMeter;
  m.irmse = std::sqrt(isq_sum / dn) * kInversePerKilometerPerInverseMeter;
  m.absrel = rel_sum / dn;
  m.sqrel = sqrel_sum / dn * kMillimetersPerMeter;
  m.delta1 = static_cast<double>(inliers) / dn;
  m.n_pixels = n;
  m.range_cap = range_cap;
  m.coverage = static_cast<double>(n) / static_cast<double>(eligible);
  return m;
}

std::string metrics_csv_header() { return "range,iMAE,iRMSE,MAE,RMSE,AbsRel,SqRel,delta1,n_pixels,coverage"; }

std::string metrics_csv_row(const std::string& label, const MetricsReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%zu,%.4f", label.c_str(), m.imae, m.irmse,
                m.mae, m.rmse, m.absrel, m.sqrel, m.delta1, m.n_pixels, m.coverage);
  return buf;
}

}  // namespace radfuse
