#include "radfuse/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace radfuse {
namespace {

constexpr int kMaxBrentIterations = 200;
constexpr double kAbsoluteTolFloor = 1e-15;

double checked(const std::function<double(double)>& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) fail(ErrorCategory::kNumeric, "brent_minimize: objective is not finite at x=" + std::to_string(x));
  return y;
}

double percentile(std::vector<double> sorted_values, double q) {
  std::sort(sorted_values.begin(), sorted_values.end());
  const double pos = q / 100.0 * static_cast<double>(sorted_values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted_values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo]);
}

}  // namespace

BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
  require(lo < hi, ErrorCategory::kParameter, "brent_minimize requires lo < hi");
  require(tol > 0.0, ErrorCategory::kParameter, "brent_minimize requires tol > 0");
  const double golden = 0.5 * (3.0 - std::sqrt(5.0));

  double a = lo, b = hi;
  double x = a + golden * (b - a);
  double w = x, v = x;
  double fx = checked(f, x);
  double fw = fx, fv = fx;
  double d = 0.0, e = 0.0;

  BrentResult res;
  res.evaluations = 1;
  for (int iter = 0; iter < kMaxBrentIterations; ++iter) {
    const double xm = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + kAbsoluteTolFloor;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) {
      res.converged = true;
      break;
    }
    ++res.iterations;

    bool golden_step = true;
    if (std::abs(e) > tol1) {
      // Parabola through (v, fv), (w, fw), (x, fx).
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = x >= xm ? a - x : b - x;
      d = golden * e;
    }

    const double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    const double fu = checked(f, u);
    ++res.evaluations;

    if (fu <= fx) {
      if (u >= x) a = x; else b = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  res.x = x;
  res.fx = fx;
  return res;
}

std::vector<ScaleSample> collect_scale_samples(const DepthImage& mono, const SparseDepthProjection& radar) {
  require(mono.same_shape(radar.width, radar.height), ErrorCategory::kInput, "mono depth and radar projection differ in size");
  const DepthImage radar_map = build_sparse_depth_map(radar);
  std::vector<ScaleSample> samples;
  for (std::size_t i = 0; i < radar_map.size(); ++i) {
    if (!radar_map.valid(i) || !mono.valid(i)) continue;
    const double m = mono.at(i);
    if (!(m > 0.0) || !std::isfinite(m)) continue;
    samples.push_back({m, radar_map.at(i)});
  }
  return samples;
}

double alignment_objective(double s, std::span<const ScaleSample> samples, AlignmentSpace space) {
  double sum = 0.0;
  if (space == AlignmentSpace::kDepth) {
    for (const auto& smp : samples) sum += std::abs(s * smp.mono - smp.radar);
  } else {
    for (const auto& smp : samples) sum += std::abs(1.0 / (s * smp.mono) - 1.0 / smp.radar);
  }
  return sum;
}

double alignment_objective(double s, const DepthImage& mono, const SparseDepthProjection& radar, AlignmentSpace space) {
  require(s > 0.0, ErrorCategory::kParameter, "alignment scale must be > 0");
  const auto samples = collect_scale_samples(mono, radar);
  require(!samples.empty(), ErrorCategory::kDegenerate, "no radar pixel overlaps a valid monocular pixel");
  return alignment_objective(s, samples, space);
}

std::pair<double, double> resolve_bounds(const BoundsPolicy& policy, std::span<const ScaleSample> samples) {
  if (const auto* fixed = std::get_if<FixedBounds>(&policy)) {
    require(fixed->lo > 0.0 && fixed->lo < fixed->hi, ErrorCategory::kParameter, "fixed scale bounds need 0 < lo < hi");
    return {fixed->lo, fixed->hi};
  }
  if (samples.size() < 5) return {1e-3, 1e3};
  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (const auto& s : samples) ratios.push_back(s.radar / s.mono);
  return {percentile(ratios, 1.0) / 10.0, percentile(ratios, 99.0) * 10.0};
}

AlignmentResult solve_global_scale(std::span<const ScaleSample> samples, const AlignmentOptions& options) {
  if (samples.empty()) fail(ErrorCategory::kDegenerate, "alignment unavailable: no radar samples after filtering");
  const auto [lo, hi] = resolve_bounds(options.bounds, samples);
  const auto objective = [&](double s) { return alignment_objective(s, samples, options.space); };
  const BrentResult br = brent_minimize(objective, lo, hi, options.brent_tol);

  std::vector<double> ratios;
  ratios.reserve(samples.size());
  for (const auto& s : samples) ratios.push_back(s.radar / s.mono);
  std::sort(ratios.begin(), ratios.end());

  double best = br.x;
  double best_f = br.fx;
  const auto upper = std::lower_bound(ratios.begin(), ratios.end(), br.x);
  auto consider = [&](double r) {
    if (r < lo || r > hi) return;
    const double fr = objective(r);
    if (fr < best_f) {
      best = r;
      best_f = fr;
    }
  };
  if (upper != ratios.begin()) consider(*std::prev(upper));
  if (upper != ratios.end()) consider(*upper);

  AlignmentResult out;
  out.scale = best;
  out.brent_scale = br.x;
  out.objective = best_f;
  out.n_samples = samples.size();
  out.lo = lo;
  out.hi = hi;
  out.iterations = br.iterations;
  return out;
}

AlignedDepth apply_global_scale(const DepthImage& mono, const AlignmentResult& result) {
  AlignedDepth out;
  out.result = result;
  out.depth = DepthImage(mono.width(), mono.height());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    if (mono.valid(i) && mono.at(i) > 0.0) out.depth.set(i, result.scale * mono.at(i));
  }
  out.inverse_depth = invert(out.depth);
  return out;
}

AlignedDepth align_global(const DepthImage& mono, const SparseDepthProjection& radar, const AlignmentOptions& options) {
  const auto samples = collect_scale_samples(mono, radar);
  return apply_global_scale(mono, solve_global_scale(samples, options));
}

}  // namespace radfuse
