#include "radfuse/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace radfuse {

std::size_t ScaleField::observed_count() const noexcept {
  return static_cast<std::size_t>(std::count(provenance.begin(), provenance.end(), ScaleProvenance::kObserved));
}

std::vector<double> ScaleField::residual() const {
  std::vector<double> r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) r[i] = u[i] - 1.0;
  return r;
}

QuasiDenseScale quasi_dense_scale(const DepthImage& dq, const DepthImage& dga) {
  require_same_shape(dq, dga, "quasi-dense depth vs aligned depth");
  QuasiDenseScale out{ScaleField(dq.width(), dq.height()), 0};
  for (std::size_t i = 0; i < dq.size(); ++i) {
    if (!dq.valid(i)) continue;
    if (!dga.valid(i) || !(dga.at(i) > kDepthFloor)) {
      ++out.demoted;
      continue;
    }
    out.field.u[i] = dga.at(i) / dq.at(i);
    out.field.provenance[i] = ScaleProvenance::kObserved;
  }
  return out;
}

SobelGradients sobel(const DepthImage& image) {
  const int w = image.width();
  const int h = image.height();
  SobelGradients g{std::vector<double>(image.size(), 0.0), std::vector<double>(image.size(), 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!image.valid(x, y)) continue;
      const double center = image.at(x, y);
      auto px = [&](int u, int v) {
        u = std::clamp(u, 0, w - 1);
        v = std::clamp(v, 0, h - 1);
        return image.valid(u, v) ? image.at(u, v) : center;
      };
      const double gx = (px(x + 1, y - 1) - px(x - 1, y - 1)) + 2.0 * (px(x + 1, y) - px(x - 1, y)) +
                        (px(x + 1, y + 1) - px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) - px(x - 1, y - 1)) + 2.0 * (px(x, y + 1) - px(x, y - 1)) +
                        (px(x + 1, y + 1) - px(x + 1, y - 1));
      const std::size_t i = image.index(x, y);
      g.gx[i] = gx;
      g.gy[i] = gy;
    }
  }
  return g;
}

SmoothnessWeights sobel_edge_weights(const DepthImage& dga, double beta) {
  require(beta > 0.0, ErrorCategory::kParameter, "edge weight scaling beta must be > 0");
  const SobelGradients g = sobel(dga);
  SmoothnessWeights out{dga.width(), dga.height(), std::vector<double>(dga.size()), std::vector<double>(dga.size())};
  for (std::size_t i = 0; i < dga.size(); ++i) {
    out.wx[i] = std::exp(-beta * std::abs(g.gx[i]));
    out.wy[i] = std::exp(-beta * std::abs(g.gy[i]));
  }
  return out;
}

namespace {

double smoothness(const std::vector<double>& u, const SmoothnessWeights& w) {
  double s = 0.0;
  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(w.width) + static_cast<std::size_t>(x);
      if (x + 1 < w.width) {
        const double d = u[i + 1] - u[i];
        s += w.wx[i] * d * d;
      }
      if (y + 1 < w.height) {
        const double d = u[i + static_cast<std::size_t>(w.width)] - u[i];
        s += w.wy[i] * d * d;
      }
    }
  }
  return s;
}

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? r * r / (2.0 * delta) : a - 0.5 * delta;
}

double huber_energy(const std::vector<double>& u, const ScaleField& obs, const SmoothnessWeights& w, double lambda,
                    double delta) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (obs.provenance[i] == ScaleProvenance::kObserved) e += huber(u[i] - obs.u[i], delta);
  }
  return e + lambda * smoothness(u, w);
}

// y = (C + 2 lambda L_w) x, where C is diagonal over observed pixels.
void apply_system(const std::vector<double>& c, const SmoothnessWeights& w, double lambda, const std::vector<double>& x,
                  std::vector<double>& y) {
  const std::size_t width = static_cast<std::size_t>(w.width);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = c[i] * x[i];
  const double k = 2.0 * lambda;
  for (int yy = 0; yy < w.height; ++yy) {
    for (int xx = 0; xx < w.width; ++xx) {
      const std::size_t i = static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx);
      if (xx + 1 < w.width) {
        const double f = k * w.wx[i] * (x[i] - x[i + 1]);
        y[i] += f;
        y[i + 1] -= f;
      }
      if (yy + 1 < w.height) {
        const double f = k * w.wy[i] * (x[i] - x[i + width]);
        y[i] += f;
        y[i + width] -= f;
      }
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Jacobi-preconditioned CG, warm-started from x.
int conjugate_gradient(const std::vector<double>& c, const SmoothnessWeights& w, double lambda,
                       const std::vector<double>& b, std::vector<double>& x, int max_iters, double tol) {
  const std::size_t n = x.size();
  const std::size_t width = static_cast<std::size_t>(w.width);
  std::vector<double> diag(c);
  for (int yy = 0; yy < w.height; ++yy) {
    for (int xx = 0; xx < w.width; ++xx) {
      const std::size_t i = static_cast<std::size_t>(yy) * width + static_cast<std::size_t>(xx);
      if (xx + 1 < w.width) {
        diag[i] += 2.0 * lambda * w.wx[i];
        diag[i + 1] += 2.0 * lambda * w.wx[i];
      }
      if (yy + 1 < w.height) {
        diag[i] += 2.0 * lambda * w.wy[i];
        diag[i + width] += 2.0 * lambda * w.wy[i];
      }
    }
  }
  std::vector<double> r(n), z(n), p(n), ap(n);
  apply_system(c, w, lambda, x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  const double bnorm = std::sqrt(dot(b, b));
  const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);
  if (std::sqrt(dot(r, r)) <= stop) return 0;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = dot(r, z);
  int it = 0;
  for (; it < max_iters; ++it) {
    apply_system(c, w, lambda, p, ap);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    if (std::sqrt(dot(r, r)) <= stop) {
      ++it;
      break;
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return it;
}

}  // namespace

double scale_energy(const std::vector<double>& u, const ScaleField& observed, const SmoothnessWeights& w,
                    double lambda_smooth) {
  double e = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (observed.provenance[i] == ScaleProvenance::kObserved) e += std::abs(u[i] - observed.u[i]);
  }
  return e + lambda_smooth * smoothness(u, w);
}

SolveReport solve_scale_field(const ScaleField& observed, const SmoothnessWeights& weights,
                              const SolverOptions& options) {
  require(options.lambda_smooth >= 0.0, ErrorCategory::kParameter, "lambda_smooth must be >= 0");
  require(options.max_iters >= 1 && options.tol > 0.0 && options.huber_delta > 0.0, ErrorCategory::kParameter,
          "solver iteration limit and tolerances must be positive");
  require(weights.width == observed.width && weights.height == observed.height, ErrorCategory::kInput,
          "smoothness weights and scale field differ in size");
  if (observed.observed_count() == 0) fail(ErrorCategory::kDegenerate, "solver unavailable: no observed scale pixels");

  const std::size_t n = observed.size();
  const double lambda = options.lambda_smooth;
  const double delta = options.huber_delta;
  SolveReport report;
  std::vector<double> u(n, 1.0);

  if (lambda == 0.0) {
    // Decoupled: each observed pixel takes its target, the rest keep 1.
    for (std::size_t i = 0; i < n; ++i) {
      if (observed.provenance[i] == ScaleProvenance::kObserved) u[i] = observed.u[i];
    }
    report.energy_trace = {huber_energy(std::vector<double>(n, 1.0), observed, weights, lambda, delta),
                           huber_energy(u, observed, weights, lambda, delta)};
    report.iterations = 1;
    report.converged = true;
  } else {
    double energy = huber_energy(u, observed, weights, lambda, delta);
    report.energy_trace.push_back(energy);
    std::vector<double> c(n, 0.0), b(n, 0.0), next;
    for (int iter = 0; iter < options.max_iters; ++iter) {
      for (std::size_t i = 0; i < n; ++i) {
        if (observed.provenance[i] != ScaleProvenance::kObserved) continue;
        c[i] = 1.0 / std::max(std::abs(u[i] - observed.u[i]), delta);
        b[i] = c[i] * observed.u[i];
      }
      next = u;
      report.cg_iterations += conjugate_gradient(c, weights, lambda, b, next, options.cg_max_iters, options.cg_tol);
      const double next_energy = huber_energy(next, observed, weights, lambda, delta);
      ++report.iterations;
      if (!std::isfinite(next_energy)) fail(ErrorCategory::kNumeric, "solver produced a non-finite energy");
      if (next_energy > energy) {
        // Round-off stall: the majorizer cannot make further progress.
        report.converged = true;
        break;
      }
      const double decrease = energy - next_energy;
      u.swap(next);
      energy = next_energy;
      report.energy_trace.push_back(energy);
      if (decrease <= options.tol * std::max(energy, std::numeric_limits<double>::min())) {
        report.converged = true;
        break;
      }
    }
  }

  report.field = observed;
  for (std::size_t i = 0; i < n; ++i) {
    double v = u[i];
    if (v < 0.0) {
      v = 0.0;
      ++report.clamp_count;
    }
    report.field.u[i] = v;
    if (observed.provenance[i] != ScaleProvenance::kObserved) report.field.provenance[i] = ScaleProvenance::kSolved;
  }
  report.energy_l1 = scale_energy(report.field.u, observed, weights, lambda);
  return report;
}

DepthImage compose_depth(const ScaleField& field, const InverseDepthImage& zga) {
  require(zga.same_shape(field.width, field.height), ErrorCategory::kInput, "scale field and inverse depth differ in size");
  DepthImage out(field.width, field.height);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double u = field.u[i];
    if (u > kInverseScaleFloor && zga.valid(i) && zga.at(i) > 0.0) out.set(i, (1.0 / u) / zga.at(i));
  }
  return out;
}

LossReport sml_losses(const DepthImage& dhat, const DepthImage& dgt, const DepthImage& dint, const DepthImage& dga,
                      double lambda_gt, double lambda_smooth, double beta) {
  require_same_shape(dhat, dgt, "estimate vs ground truth");
  require_same_shape(dhat, dint, "estimate vs interpolated ground truth");
  require_same_shape(dhat, dga, "estimate vs aligned depth");
  LossReport rep;
  rep.lambda_gt = lambda_gt;
  rep.lambda_smooth = lambda_smooth;

  auto l1 = [&](const DepthImage& ref, std::size_t& count) {
    double sum = 0.0;
    count = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (!ref.valid(i) || !dhat.valid(i)) continue;
      sum += std::abs(ref.at(i) - dhat.at(i));
      ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };
  rep.depth_int = l1(dint, rep.n_int);
  rep.depth_gt = l1(dgt, rep.n_gt);
  if (rep.n_int == 0 && rep.n_gt == 0) fail(ErrorCategory::kUndefined, "sml_losses: no valid ground-truth pixels");

  const SmoothnessWeights w = sobel_edge_weights(dga, beta);
  const SobelGradients g = sobel(dhat);
  double smooth = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < dhat.size(); ++i) {
    if (!dhat.valid(i)) continue;
    smooth += w.wx[i] * std::abs(g.gx[i]) + w.wy[i] * std::abs(g.gy[i]);
    ++n;
  }
  rep.smooth = n > 0 ? smooth / static_cast<double>(n) : 0.0;
  rep.total = rep.depth_int + lambda_gt * rep.depth_gt + lambda_smooth * rep.smooth;
  return rep;
}

}  // namespace radfuse
