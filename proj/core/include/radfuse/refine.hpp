#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "radfuse/image.hpp"

namespace radfuse {

enum class ScaleProvenance : std::uint8_t { kFilled = 0, kObserved = 1, kSolved = 2 };

/// Dense inverse scale u = 1/s per pixel. Observed pixels carry the quasi-dense
/// value; the rest start at 1.
struct ScaleField {
  int width = 0;
  int height = 0;
  std::vector<double> u;
  std::vector<ScaleProvenance> provenance;

  ScaleField() = default;
  ScaleField(int w, int h)
      : width(w),
        height(h),
        u(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 1.0),
        provenance(u.size(), ScaleProvenance::kFilled) {}

  std::size_t size() const noexcept { return u.size(); }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  std::size_t observed_count() const noexcept;
  /// Residual r = u - 1.
  std::vector<double> residual() const;
};

struct QuasiDenseScale {
  ScaleField field;
  std::size_t demoted = 0;  // dq pixels dropped because dga was invalid or below the floor
};

constexpr double kDepthFloor = 1e-3;  // meters
constexpr double kInverseScaleFloor = 1e-6;

/// u = dga / dq where dq is valid (and dga valid above the depth floor);
/// 1 elsewhere.
QuasiDenseScale quasi_dense_scale(const DepthImage& dq, const DepthImage& dga);

struct SmoothnessWeights {
  int width = 0;
  int height = 0;
  std::vector<double> wx;
  std::vector<double> wy;
};

struct SobelGradients {
  std::vector<double> gx;
  std::vector<double> gy;
};

/// 3x3 Sobel gradients with border replication (unnormalized kernels, so a
/// unit step yields 4). Invalid pixels take the value of the center pixel.
SobelGradients sobel(const DepthImage& image);

/// wx = exp(-beta |Gx dga|), wy = exp(-beta |Gy dga|).
SmoothnessWeights sobel_edge_weights(const DepthImage& dga, double beta);

struct SolverOptions {
  double lambda_smooth = 1.0;
  int max_iters = 100;
  double tol = 1e-6;
  double huber_delta = 1e-4;
  int cg_max_iters = 2000;
  double cg_tol = 1e-10;
};

struct SolveReport {
  ScaleField field;
  std::vector<double> energy_trace;  // Huberized energy, one entry per accepted outer iterate (index 0 = start)
  double energy_l1 = 0.0;            // exact L1 energy of the returned field
  int iterations = 0;
  int cg_iterations = 0;
  bool converged = false;
  std::size_t clamp_count = 0;
};

/// Exact energy  sum_obs |u - u_q| + lambda * sum [wx (u_right - u)^2 + wy (u_down - u)^2].
double scale_energy(const std::vector<double>& u, const ScaleField& observed, const SmoothnessWeights& w,
                    double lambda_smooth);

/// Completes the observed inverse scale into a dense field by minimizing the
/// energy above with the L1 term Huberized (delta = huber_delta). Each outer
/// iteration majorizes the Huber term by a weighted quadratic and solves the
/// resulting SPD system with Jacobi-preconditioned conjugate gradients,
/// warm-started from the previous iterate, so the Huberized energy never
/// increases. Stops once the relative energy decrease drops below tol.
/// Negative values are clamped to 0 at the end and counted.
///
/// Throws kDegenerate when no pixel is observed.
SolveReport solve_scale_field(const ScaleField& observed, const SmoothnessWeights& weights,
                              const SolverOptions& options = {});

/// d = (1/u) / zga where u > kInverseScaleFloor and zga is valid and positive.
DepthImage compose_depth(const ScaleField& field, const InverseDepthImage& zga);

struct LossReport {
  double depth_int = 0.0;
  double depth_gt = 0.0;
  double smooth = 0.0;
  double total = 0.0;
  double lambda_gt = 1.0;
  double lambda_smooth = 1.0;
  std::size_t n_int = 0;
  std::size_t n_gt = 0;
};

/// Training-style loss of a depth estimate:
///   L(d, dhat) = mean over valid d of |d - dhat|
///   L_depth    = L(d_int, dhat) + lambda_gt * L(d_gt, dhat)
///   L_smooth   = mean over pixels of wx |Gx dhat| + wy |Gy dhat|  (weights from dga)
///   total      = L_depth + lambda_smooth * L_smooth
/// A term whose reference has no valid pixels contributes 0; if both are
/// empty, throws kUndefined.
LossReport sml_losses(const DepthImage& dhat, const DepthImage& dgt, const DepthImage& dint, const DepthImage& dga,
                      double lambda_gt, double lambda_smooth, double beta);

}  // namespace radfuse
