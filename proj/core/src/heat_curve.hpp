#pragma once

// Shared internals for the measured heat-content curves d(t) and G(t): the
// per-node forward kernels, composite Simpson weights in x = log t, and the
// weighted small-time power-law fit with its below-cutoff integral.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/matlin.hpp"
#include "kfp/operator_model.hpp"

namespace kfp::detail {

struct TimeKernels {
  std::vector<Matrix> exp_tB;
  std::vector<Matrix> sqrt_cov;
  std::vector<double> adj_mass;  // e^{-t tr B}
};

inline TimeKernels make_kernels(const OperatorSpec& spec,
                                const std::vector<double>& ts) {
  TimeKernels tk;
  tk.exp_tB.reserve(ts.size());
  tk.sqrt_cov.reserve(ts.size());
  tk.adj_mass.reserve(ts.size());
  for (double t : ts) {
    if (!(t > 0.0)) throw InvalidInput("curve times must be positive");
    CovarianceBundle cb = covariance(spec, t);
    tk.exp_tB.push_back(cb.exp_tB);
    tk.sqrt_cov.push_back(cb.sqrt_cov);
    tk.adj_mass.push_back(std::exp(-t * spec.trace_B()));
  }
  return tk;
}

// Composite Simpson weights for integration in x = log t; `stride` = 2 gives
// the embedded coarse rule on the same nodes.
inline std::vector<double> simpson_log_weights(size_t npts, double h,
                                               size_t stride) {
  std::vector<double> w(npts, 0.0);
  size_t nint = (npts - 1) / stride;
  double hh = h * static_cast<double>(stride);
  for (size_t i = 0; i + 2 <= nint; i += 2) {
    w[i * stride] += hh / 3.0;
    w[(i + 1) * stride] += 4.0 * hh / 3.0;
    w[(i + 2) * stride] += hh / 3.0;
  }
  return w;
}

// Weighted least squares of log(value) against log(t), weights (value/err)^2,
// centered at the weighted pivot. Nodes with value <= 2 err are skipped; the
// fit needs at least 4 survivors.
struct PowerFit {
  double beta = 0.0;   // fitted exponent
  double a_piv = 0.0;  // fitted log-value at x = xbar
  double xbar = 0.0;
  double var_a = std::numeric_limits<double>::infinity();
  double var_b = std::numeric_limits<double>::infinity();
  int used = 0;
};

inline PowerFit fit_power_curve(const std::vector<double>& ts,
                                const std::vector<double>& vals,
                                const std::vector<double>& errs) {
  PowerFit f;
  std::vector<double> fx, fy, fw;
  for (size_t k = 0; k < ts.size(); ++k) {
    double d = vals[k], sd = errs[k];
    if (d > 2.0 * sd && d > 0.0 && sd > 0.0) {
      fx.push_back(std::log(ts[k]));
      fy.push_back(std::log(d));
      fw.push_back((d / sd) * (d / sd));
    }
  }
  f.used = static_cast<int>(fx.size());
  if (f.used < 4) return f;
  double sw = 0.0, swx = 0.0;
  for (size_t k = 0; k < fx.size(); ++k) {
    sw += fw[k];
    swx += fw[k] * fx[k];
  }
  f.xbar = swx / sw;
  double sxx = 0.0, sxy = 0.0, sy = 0.0;
  for (size_t k = 0; k < fx.size(); ++k) {
    double dx = fx[k] - f.xbar;
    sxx += fw[k] * dx * dx;
    sxy += fw[k] * dx * fy[k];
    sy += fw[k] * fy[k];
  }
  f.beta = sxy / sxx;
  f.a_piv = sy / sw;
  f.var_a = 1.0 / sw;
  f.var_b = 1.0 / sxx;
  return f;
}

// int_0^tmin t^{-1-s} c t^beta dt with c anchored at the fit pivot, plus a
// delta-method error bar. Divergent when the fit is unusable or beta <= s
// (integrand not integrable at 0).
struct BelowCut {
  double value = 0.0;
  double mc_error = 0.0;
  bool divergent = false;
};

inline BelowCut below_cut_integral(const PowerFit& f, double tmin, double s) {
  BelowCut b;
  if (f.used < 4 || f.beta <= s) {
    b.divergent = true;
    return b;
  }
  double lt = std::log(tmin);
  double log_below =
      f.a_piv + f.beta * (lt - f.xbar) - s * lt - std::log(f.beta - s);
  b.value = std::exp(log_below);
  double dldb = lt - f.xbar - 1.0 / (f.beta - s);
  b.mc_error = b.value * std::sqrt(f.var_a + dldb * dldb * f.var_b);
  return b;
}

}  // namespace kfp::detail
