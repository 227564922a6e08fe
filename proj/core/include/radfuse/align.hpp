#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "radfuse/geometry.hpp"
#include "radfuse/image.hpp"

namespace radfuse {

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Bounded scalar minimization on [lo, hi] combining golden-section steps
/// with successive parabolic interpolation (Brent's fmin). Terminates when
/// the bracket half-width falls below tol * |x| + 1e-15, or after 200
/// iterations. Throws kNumeric if f returns a non-finite value.
BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

/// One radar pixel paired with the monocular depth under it.
struct ScaleSample {
  double mono = 0.0;
  double radar = 0.0;
};

enum class AlignmentSpace { kDepth, kInverseDepth };

/// Radar pixels (z-buffered) where the monocular map is valid and positive.
std::vector<ScaleSample> collect_scale_samples(const DepthImage& mono, const SparseDepthProjection& radar);

/// Sum over samples of |s * mono - radar| (or |1/(s mono) - 1/radar| in
/// inverse space).
double alignment_objective(double s, std::span<const ScaleSample> samples,
                           AlignmentSpace space = AlignmentSpace::kDepth);
/// Throws kDegenerate when no radar pixel overlaps a valid mono pixel.
double alignment_objective(double s, const DepthImage& mono, const SparseDepthProjection& radar,
                           AlignmentSpace space = AlignmentSpace::kDepth);

/// Bounds from percentiles of radar/mono ratios: [q1 / 10, q99 * 10], falling
/// back to [1e-3, 1e3] with fewer than five samples.
struct PercentileBounds {};
struct FixedBounds {
  double lo = 1e-3;
  double hi = 1e3;
};
using BoundsPolicy = std::variant<PercentileBounds, FixedBounds>;

std::pair<double, double> resolve_bounds(const BoundsPolicy& policy, std::span<const ScaleSample> samples);

struct AlignmentOptions {
  BoundsPolicy bounds = PercentileBounds{};
  double brent_tol = 1e-10;
  AlignmentSpace space = AlignmentSpace::kDepth;
};

struct AlignmentResult {
  double scale = 0.0;        // the global scale factor
  double brent_scale = 0.0;  // raw Brent iterate before breakpoint snapping
  double objective = 0.0;    // meters (1/meters in inverse space)
  std::size_t n_samples = 0;
  double lo = 0.0;
  double hi = 0.0;
  int iterations = 0;
};

struct AlignedDepth {
  AlignmentResult result;
  DepthImage depth;                 // scale * mono
  InverseDepthImage inverse_depth;  // 1 / depth on valid pixels
};

/// Minimizes the summed L1 objective over the scale with bounded Brent.
///
/// The objective is piecewise linear with kinks at the per-sample ratios
/// radar / mono, so its minimum is attained at one of them. After Brent
/// returns, the two ratios bracketing its iterate are evaluated and the best
/// of the three points is kept; `brent_scale` records the unsnapped value.
///
/// Throws kDegenerate (alignment unavailable) when there are no samples.
AlignmentResult solve_global_scale(std::span<const ScaleSample> samples, const AlignmentOptions& options = {});

AlignedDepth align_global(const DepthImage& mono, const SparseDepthProjection& radar,
                          const AlignmentOptions& options = {});

/// Scales every valid pixel and forms the inverse map.
AlignedDepth apply_global_scale(const DepthImage& mono, const AlignmentResult& result);

}  // namespace radfuse
