#include "kfp/besov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heat_curve.hpp"
#include "kfp/perimeter.hpp"
#include "kfp/quadrature.hpp"
#include "kfp/semigroup.hpp"

namespace kfp {

using detail::make_kernels;
using detail::simpson_log_weights;
using detail::TimeKernels;

namespace {

constexpr double kTmin = 1e-5;
constexpr int kNodesPerDecade = 12;

// Extra sampling factor for the smallest decade, which feeds the power-law
// fit (same role as in the perimeter assembly).
constexpr uint64_t kFitBoost = 16;

// Decades above t = 1. G saturates near (1 + e^{-t tr B}) ||f||_1 at large
// t, so the remaining mass past the grid end T is about ||f||_1 T^{-alpha/2}
// over alpha/2; the grid is extended until that factor reaches 1e-3, capped
// at 1e13 where the bracket below is still certified but wider.
int decades_above_one(double alpha) {
  return std::min(13, static_cast<int>(std::ceil(6.0 / alpha)));
}

}  // namespace

std::vector<MCEstimate> besov_curve(const OperatorSpec& spec,
                                    const ScalarField& f,
                                    const std::vector<double>& ts, uint64_t n,
                                    uint64_t seed, int workers) {
  spec.validate();
  if (f.dim() != spec.dim) throw InvalidInput("field dimension mismatch");
  if (ts.empty()) throw InvalidInput("besov_curve: empty time grid");
  const int nt = static_cast<int>(ts.size());
  const int dim = spec.dim;
  TimeKernels tk = make_kernels(spec, ts);

  GaussianMixture qmix = GaussianMixture::covering({&f});

  // G(t) = int E_Y[|f(Y) - f(X)| - |f(Y)|] dX + e^{-t tr B} ||f||_1, and the
  // bracketed inner expectation is bounded by |f(X)| pointwise, so one
  // importance mixture covering f alone works at every t. One kernel draw
  // per outer point per node,
  //   v_k = ( |f(Y_k)-f(X)| - |f(Y_k)| + e^{-t_k tr B} |f(X)| ) / q(X),
  // is unbiased since int p(X,.,t) dX = e^{-t tr B}. Once the kernel has
  // spread past the support of f the bracket is deterministic, so the
  // variance is carried by the importance ratio |f(X)|/q(X) and every sample
  // is best spent on a fresh X. The normal draw z is shared across nodes,
  // which correlates the curve in t and steadies the small-time power fit.
  std::vector<double> sum, sumsq;
  mc_accumulate(
      n, nt, workers,
      [&](uint64_t i, double* out) {
        thread_local Matrix mu;
        thread_local Vector z, y;
        mu.resize(dim, nt);
        z.resize(dim);
        y.resize(dim);

        RandomStream rs(seed, streams::kBesov, i);
        Vector X = qmix.sample(rs);
        double q = qmix.pdf(X);
        double fX = f(X);
        double aX = std::abs(fX);
        for (int k = 0; k < nt; ++k) mu.col(k).noalias() = tk.exp_tB[k] * X;

        rs.fill_normal(z);
        for (int k = 0; k < nt; ++k) {
          y.noalias() = mu.col(k) + tk.sqrt_cov[k] * z;
          double fY = f(y);
          out[k] = (std::abs(fY - fX) - std::abs(fY) + tk.adj_mass[k] * aX) / q;
        }
      },
      sum, sumsq);

  std::vector<MCEstimate> curve(nt);
  for (int k = 0; k < nt; ++k)
    curve[k] = reduce_mean(sum[k], sumsq[k], n, seed);
  return curve;
}

// ---------------------------------------------------------------------------

BesovReport besov_seminorm_detail(const OperatorSpec& spec,
                                  const ScalarField& f, double alpha, int p,
                                  uint64_t n, uint64_t seed, int workers) {
  spec.validate();
  if (p != 1) throw InvalidInput("besov seminorm is evaluated for p = 1 only");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInput("besov order must lie in (0, 1)");
  if (!spec.trace_ok()) throw InvalidInput("besov seminorm needs tr B >= 0");
  if (f.dim() != spec.dim) throw InvalidInput("field dimension mismatch");

  const double sp = 0.5 * alpha;  // integrand is t^{-1-sp} G(t)
  const double l1 = f.lp_mass_bound(1);
  const double trB = spec.trace_B();

  BesovReport rep;
  rep.alpha = alpha;
  if (l1 == 0.0) return rep;  // zero field: seminorm exactly 0

  const int npd = kNodesPerDecade;
  const int ndec = 5 + decades_above_one(alpha);
  const int nint = ndec * npd;
  const double h = std::log(10.0) / npd;
  const double x0 = std::log(kTmin);
  std::vector<double> ts(nint + 1);
  for (int k = 0; k <= nint; ++k) ts[k] = std::exp(x0 + k * h);

  rep.times = ts;
  rep.g = besov_curve(spec, f, ts, n, seed, workers);

  // Boosted re-measurement of the decade that feeds the small-time fit.
  {
    std::vector<double> fit_ts(ts.begin(), ts.begin() + npd + 1);
    std::vector<MCEstimate> fit_curve =
        besov_curve(spec, f, fit_ts, n * kFitBoost, seed, workers);
    for (int k = 0; k <= npd; ++k) rep.g[k] = fit_curve[k];
  }
  for (auto& e : rep.g) e.value = std::max(0.0, e.value);

  // Grid integral of t^{-sp} G in x = log t, fine and embedded coarse.
  std::vector<double> wf = simpson_log_weights(ts.size(), h, 1);
  std::vector<double> wc = simpson_log_weights(ts.size(), h, 2);
  double fine = 0.0, coarse = 0.0, grid_mc = 0.0;
  for (size_t k = 0; k < ts.size(); ++k) {
    double g = std::pow(ts[k], -sp);
    fine += wf[k] * g * rep.g[k].value;
    coarse += wc[k] * g * rep.g[k].value;
    grid_mc += wf[k] * g * rep.g[k].std_error;
  }

  // Small-time power-law fit and below-cut extrapolation; failure to fit an
  // integrable exponent flags divergence and leaves the mass out.
  double below = 0.0, below_mc = 0.0;
  {
    std::vector<double> fit_t(ts.begin(), ts.begin() + npd + 1);
    std::vector<double> fit_v(npd + 1), fit_e(npd + 1);
    for (int k = 0; k <= npd; ++k) {
      fit_v[k] = rep.g[k].value;
      fit_e[k] = rep.g[k].std_error;
    }
    detail::PowerFit fit = detail::fit_power_curve(fit_t, fit_v, fit_e);
    rep.beta = fit.beta;
    detail::BelowCut bc = detail::below_cut_integral(fit, kTmin, sp);
    rep.divergence_warning = bc.divergent;
    below = bc.value;
    below_mc = bc.mc_error;
  }

  // Past the grid: 0 <= G(t) <= (1 + e^{-t tr B}) ||f||_1, taken as a
  // bracket mid +- half.
  double tail_mid = 0.0, tail_half = 0.0;
  {
    double T = ts.back();
    double base = l1 * std::pow(T, -sp) / sp;
    double J;
    if (trB > 0.0) {
      double t_end = T + 60.0 / trB;
      J = l1 * adaptive_simpson(
                   [&](double t) {
                     return std::pow(t, -1.0 - sp) * std::exp(-t * trB);
                   },
                   T, t_end, 1e-14 * base)
                   .value;
    } else {
      J = base;
    }
    tail_mid = 0.5 * (base + J);
    tail_half = tail_mid;
  }

  rep.value = fine + below + tail_mid;
  rep.quad_error = std::abs(fine - coarse) + tail_half;
  rep.mc_error = grid_mc + below_mc;
  return rep;
}

MCEstimate besov_seminorm(const OperatorSpec& spec, const ScalarField& f,
                          double alpha, int p, uint64_t n, uint64_t seed,
                          int workers) {
  BesovReport rep = besov_seminorm_detail(spec, f, alpha, p, n, seed, workers);
  MCEstimate e;
  e.value = rep.value;
  e.std_error = rep.quad_error + rep.mc_error;
  e.n = n;
  e.seed = seed;
  return e;
}

// ---------------------------------------------------------------------------

LevelSetProfile::LevelSetProfile(ScalarField f) : f_(std::move(f)) {
  ScalarField::Kind k = f_.kind();
  if ((k != ScalarField::Kind::Gaussian && k != ScalarField::Kind::Bump) ||
      f_.amplitude() <= 0.0)
    throw InvalidInput(
        "level-set profile needs a gaussian or bump field with positive "
        "amplitude");
  sigma_max_ = f_.amplitude();
}

RegionPtr LevelSetProfile::level_region(double sigma) const {
  if (!(sigma > 0.0))
    throw InvalidInput("superlevel threshold must be positive");
  if (sigma >= sigma_max_) return nullptr;
  if (f_.kind() == ScalarField::Kind::Gaussian) {
    // {(X-mu)^T Sigma^{-1} (X-mu) < 2 log(amp/sigma)}
    double r2 = 2.0 * std::log(sigma_max_ / sigma);
    Matrix A = f_.gaussian_cov().inverse() / r2;
    return make_ellipsoid(f_.gaussian_mean(), A);
  }
  double rad =
      f_.bump_radius() *
      std::sqrt(1.0 - std::pow(sigma / sigma_max_, 1.0 / f_.bump_power()));
  return make_ball(f_.bump_center(), rad);
}

double LevelSetProfile::level_measure(double sigma) const {
  if (!(sigma > 0.0))
    throw InvalidInput("superlevel threshold must be positive");
  if (sigma >= sigma_max_) return 0.0;
  int N = f_.dim();
  if (f_.kind() == ScalarField::Kind::Gaussian) {
    double r2 = 2.0 * std::log(sigma_max_ / sigma);
    // |{x^T Sigma^{-1} x < r2}| = omega_N r2^{N/2} sqrt(det Sigma)
    return omega_n(N) *
           std::exp(0.5 * (N * std::log(r2) + logdet_spd(f_.gaussian_cov())));
  }
  double rad =
      f_.bump_radius() *
      std::sqrt(1.0 - std::pow(sigma / sigma_max_, 1.0 / f_.bump_power()));
  return omega_n(N) * std::pow(rad, N);
}

// ---------------------------------------------------------------------------

CoareaReport coarea_residual(const OperatorSpec& spec,
                             const LevelSetProfile& prof, double s,
                             int n_levels, uint64_t n, uint64_t seed,
                             int workers) {
  if (!(s > 0.0 && s < 0.5)) throw InvalidInput("order must lie in (0, 1/2)");
  if (n_levels < 2) throw InvalidInput("coarea needs at least 2 levels");

  CoareaReport rep;
  BesovReport lhs =
      besov_seminorm_detail(spec, prof.field(), 2.0 * s, 1, n, seed, workers);
  rep.lhs = lhs.value;
  rep.lhs_err = lhs.quad_error + lhs.mc_error;

  // sigma integral of per(E_sigma, s) over (0, sigma_max) on Gauss-Legendre
  // nodes; the integrand vanishes continuously at sigma_max and grows only
  // logarithmically near 0 for gaussian profiles.
  int order = std::min(n_levels, 12);
  int panels = (n_levels + order - 1) / order;
  Grid grid = gl_panels(0.0, prof.sigma_max(), panels, order);

  double quad = 0.0, err = 0.0;
  FracQuadSpec fq;
  for (size_t j = 0; j < grid.x.size(); ++j) {
    RegionPtr E = prof.level_region(grid.x[j]);
    if (!E) continue;
    PerimeterEstimate pe = frac_perimeter(spec, *E, s, fq, n,
                                          seed + 977 * (j + 1), workers);
    quad += grid.w[j] * pe.value;
    err += grid.w[j] * (pe.quad_error + pe.mc_error);
    rep.sigma.push_back(grid.x[j]);
    rep.level_meas.push_back(E->measure());
    rep.per_value.push_back(pe.value);
  }
  double scale = std::tgamma(1.0 - s) / s;
  rep.rhs = scale * quad;
  rep.rhs_err = scale * err;
  rep.residual = rep.lhs > 0.0
                     ? std::abs(rep.lhs - rep.rhs) / rep.lhs
                     : (rep.rhs == 0.0
                            ? 0.0
                            : std::numeric_limits<double>::infinity());
  return rep;
}

// ---------------------------------------------------------------------------

LayerCakeReport layercake_check(const std::vector<double>& edges,
                                const std::vector<double>& values, double D,
                                double s) {
  if (!(s > 0.0) || !(D > 2.0 * s))
    throw InvalidInput("layer cake needs D > 2s > 0");
  if (values.empty() || edges.size() != values.size() + 1)
    throw InvalidInput("layer cake needs edges.size() == values.size() + 1");
  if (!(edges.front() >= 0.0))
    throw InvalidInput("layer cake edges must start at >= 0");
  for (size_t k = 0; k + 1 < edges.size(); ++k)
    if (!(edges[k + 1] > edges[k]))
      throw InvalidInput("layer cake edges must be strictly increasing");
  for (size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] >= 0.0))
      throw InvalidInput("layer cake values must be nonnegative");
    if (k > 0 && values[k] > values[k - 1] * (1.0 + 1e-12))
      throw InvalidInput("layer cake needs a non-increasing function");
  }

  // Both sides are evaluated exactly for the step function that equals
  // values[k] on [edges[k], edges[k+1]) and 0 beyond: the left integrand
  // t^{2s/(D-2s)} has antiderivative t^Q / Q with Q = D/(D-2s), and the
  // leading factor D/(D-2s) cancels the 1/Q.
  const double Q = D / (D - 2.0 * s);
  const double b = (D - 2.0 * s) / D;
  LayerCakeReport r;
  for (size_t k = 0; k < values.size(); ++k) {
    r.lhs += values[k] * (std::pow(edges[k + 1], Q) - std::pow(edges[k], Q));
    r.rhs += std::pow(values[k], b) * (edges[k + 1] - edges[k]);
  }
  r.rhs = std::pow(r.rhs, Q);
  r.ok = r.lhs <= r.rhs * (1.0 + 1e-6);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// int_{lo}^{hi} q sigma^{q-1} (|E_sigma| - m_sub) dsigma in x = log sigma.
// The lower end is cut at hi * 1e-30; below that the integrand contributes
// less than (lo_eff/hi)^q of the hi-scale mass times a slowly varying
// factor, which is under double precision for the supported profiles.
QuadResult layer_power_integral(const LevelSetProfile& prof, double q,
                                double lo, double hi, double m_sub) {
  double lo_eff = std::max(lo, hi * 1e-30);
  if (!(hi > lo_eff)) return {};
  double mid = std::sqrt(lo_eff * hi);
  double scale =
      std::pow(hi, q) * (prof.level_measure(mid) + m_sub + 1e-12);
  return adaptive_simpson(
      [&](double x) {
        double sig = std::exp(x);
        return q * std::exp(q * x) *
               std::max(0.0, prof.level_measure(sig) - m_sub);
      },
      std::log(lo_eff), std::log(hi), 1e-9 * scale);
}

}  // namespace

SobolevReport sobolev_ratio(const OperatorSpec& spec,
                            const LevelSetProfile& prof, double s, uint64_t n,
                            uint64_t seed, int workers) {
  if (!(s > 0.0 && s < 0.5)) throw InvalidInput("order must lie in (0, 1/2)");
  const ScalarField& f = prof.field();
  ImpliedConstant ic = implied_iso_constant(spec, s);

  SobolevReport r;
  r.regime = ic.regime == "single" ? "single" : "two-regime";
  r.D0 = ic.D0;
  r.Dinf = ic.Dinf;
  r.i_s = ic.value;
  r.q0 = ic.D0 / (ic.D0 - 2.0 * s);
  r.qinf = ic.Dinf / (ic.Dinf - 2.0 * s);

  BesovReport sem =
      besov_seminorm_detail(spec, f, 2.0 * s, 1, n, seed, workers);
  r.seminorm = sem.value;
  r.seminorm_err = sem.quad_error + sem.mc_error;

  const double gam = std::tgamma(1.0 - s);
  if (ic.regime == "single") {
    // ||f||_q by importance sampling against the covering mixture.
    double q = r.q0;
    GaussianMixture qmix = GaussianMixture::covering({&f});
    MCEstimate mq = mc_mean(n, workers, seed, [&](uint64_t i) {
      RandomStream rs(seed, streams::kProfile, i);
      Vector X = qmix.sample(rs);
      return std::pow(std::abs(f(X)), q) / qmix.pdf(X);
    });
    r.lhs = std::pow(std::max(0.0, mq.value), 1.0 / q);
    if (mq.value > 0.0) r.lhs_err = r.lhs * mq.std_error / (q * mq.value);
    r.rhs = s / (ic.value * gam) * sem.value;
    r.rhs_err = s / (ic.value * gam) * r.seminorm_err;
  } else {
    // Split threshold sigma_f = sup{sigma : |E_sigma| > 1}. Level measures
    // are closed form and strictly decreasing, so bisect in log sigma.
    double smax = prof.sigma_max();
    double sf = 0.0;
    if (prof.level_measure(smax * 1e-300) > 1.0) {
      double xlo = std::log(smax * 1e-300), xhi = std::log(smax);
      for (int it = 0; it < 200; ++it) {
        double xm = 0.5 * (xlo + xhi);
        if (prof.level_measure(std::exp(xm)) > 1.0)
          xlo = xm;
        else
          xhi = xm;
      }
      sf = std::exp(0.5 * (xlo + xhi));
    }
    r.sigma_f = sf;

    // ||f1||_{q0} with f1 = f 1_{E_{sigma_f}}: the superlevel sets of f1 are
    // E_{sigma_f} below the threshold and E_sigma above it, so the layer
    // cake gives sigma_f^{q0} |E_{sigma_f}| plus the integral over
    // [sigma_f, sigma_max]. ||f2||_{qinf} integrates |E_sigma| - |E_{sigma_f}|
    // below the threshold.
    double q0 = r.q0, qi = r.qinf;
    double Mf = sf > 0.0 ? prof.level_measure(sf) : 0.0;
    QuadResult I1 = layer_power_integral(prof, q0, sf, smax, 0.0);
    double pow1 = (sf > 0.0 ? std::pow(sf, q0) * Mf : 0.0) + I1.value;
    double n1 = pow1 > 0.0 ? std::pow(pow1, 1.0 / q0) : 0.0;
    double n1_err =
        pow1 > 0.0 ? n1 * I1.error / (q0 * pow1) : 0.0;

    double n2 = 0.0, n2_err = 0.0;
    if (sf > 0.0) {
      QuadResult I2 = layer_power_integral(prof, qi, 0.0, sf, Mf);
      if (I2.value > 0.0) {
        n2 = std::pow(I2.value, 1.0 / qi);
        n2_err = n2 * I2.error / (qi * I2.value);
      }
    }
    r.lhs = n1 + n2;
    r.lhs_err = n1_err + n2_err;
    r.rhs = 2.0 * s / (ic.value * gam) * sem.value;
    r.rhs_err = 2.0 * s / (ic.value * gam) * r.seminorm_err;
  }

  double rel = (r.lhs_err + r.rhs_err) / std::max(r.rhs, 1e-300);
  r.ok = r.lhs <= r.rhs * (1.0 + 5.0 * rel);
  return r;
}

}  // namespace kfp
