#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "radfuse/image.hpp"

namespace radfuse {

// Reporting units. Depth errors are computed in meters and scaled on output.
constexpr double kMillimetersPerMeter = 1000.0;
constexpr double kInversePerKilometerPerInverseMeter = 1000.0;  // 1/m -> 1/km
constexpr double kDeltaThreshold = 1.25;

/// What to do with evaluation pixels whose prediction is invalid.
enum class MissingPrediction {
  kExclude,   // drop them, report coverage
  kPenalize,  // count them as a zero-depth, zero-inverse-depth prediction
};

struct MetricsReport {
  double mae = 0.0;     // mm
  double rmse = 0.0;    // mm
  double imae = 0.0;    // 1/km
  double irmse = 0.0;   // 1/km
  double absrel = 0.0;  // dimensionless
  double sqrel = 0.0;   // mm (mean of (p - g)^2 / g in meters, times 1000)
  double delta1 = 0.0;  // fraction
  std::size_t n_pixels = 0;
  double range_cap = 0.0;  // m
  double coverage = 0.0;   // evaluated / eligible ground-truth pixels
};

/// Standard depth metrics over pixels with valid ground truth in (0, range_cap].
/// Throws kUndefined when nothing is left to evaluate.
MetricsReport compute_metrics(const DepthImage& pred, const DepthImage& gt, double range_cap,
                              MissingPrediction missing = MissingPrediction::kExclude);

/// Column order used by the published tables.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const MetricsReport& m);

}  // namespace radfuse
