#include "kfp/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kfp/errors.hpp"
#include "kfp/quadrature.hpp"

namespace kfp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Time rules. A rule encodes one truncated time integral as a finite
// functional of the curve phi(u) = P_u f(X):
//   integral ~ sum_k w[k] phi(t[k]) + w0 phi(0).
// Rules compose: a nested fractional integral is an outer rule whose curve
// values are themselves inner rules shifted in time.

struct TimeRule {
  std::vector<double> t;
  std::vector<double> w;
  double w0 = 0.0;
};

// Shortest usable rule time. Chain operators have K(t) eigenvalues ~ t^2/12,
// and the covariance contract requires them above 1e-12; the secant fold
// already captures the sub-tmin integral to second order (residual
// ~ tmin^{2-s}), so nothing is gained by going lower anyway.
constexpr double kRuleTimeFloor = 1e-5;

// integral_a^b t^{power-1} phi(t) dt with GL panels in log t; `centered`
// integrates phi - phi(0) instead of phi.
void append_power_segment(TimeRule& r, double a, double b, double power,
                          int order, double width, bool centered) {
  if (!(a > 0.0) || !(b > a)) throw InvalidInput("time segment must satisfy 0 < a < b");
  int panels =
      std::max(1, static_cast<int>(std::ceil((std::log(b) - std::log(a)) / width)));
  Grid g = gl_log_panels(a, b, panels, order);
  for (size_t i = 0; i < g.x.size(); ++i) {
    double wi = g.w[i] * std::pow(g.x[i], power - 1.0);
    r.t.push_back(g.x[i]);
    r.w.push_back(wi);
    if (centered) r.w0 -= wi;
  }
}

// Balakrishnan integral J = integral_0^inf t^{-1-s} (phi(t) - phi(0)) dt,
// truncated to [t_min, T1]. Below t_min the integrand is ~ t^{-s} phi'(0+);
// that remainder is folded in through the secant at the first node. Beyond
// T1 only the exact -phi(0) part is kept; the discarded P_t phi part is
// certified by the ultracontractive tail bound on the caller's side.
TimeRule bala_rule(double s, double T1, int order, double width, double refine) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("fractional order must lie in (0,1)");
  TimeRule r;
  double tmin =
      std::max(std::pow(1e-12 * refine, 1.0 / (2.0 - s)), kRuleTimeFloor);
  append_power_segment(r, tmin, T1, -s, order, width, true);
  double tfirst = r.t.front();
  double corr = std::pow(tmin, 1.0 - s) / ((1.0 - s) * tfirst);
  r.w.front() += corr;
  r.w0 -= corr;
  r.w0 -= std::pow(T1, -s) / s;
  return r;
}

// Riesz integral J = integral_0^inf t^{alpha/2-1} phi(t) dt truncated at T1.
// On [0, T0] the phi(0) part integrates exactly and the rest is centered so
// the near-zero remainder is again a secant fold; on [T0, T1] phi is
// integrated directly.
TimeRule riesz_rule(double alpha, double T0, double T1, int order, double width,
                    double refine) {
  if (!(alpha > 0.0)) throw InvalidInput("riesz order must be positive");
  double h = alpha / 2.0;
  TimeRule r;
  double tmin = std::min(std::pow(1e-12 * refine, 1.0 / (1.0 + h)), T0 * 1e-4);
  tmin = std::max(tmin, std::min(kRuleTimeFloor, 0.01 * T0));
  append_power_segment(r, tmin, T0, h, order, width, true);
  double tfirst = r.t.front();
  double corr = std::pow(tmin, 1.0 + h) / ((1.0 + h) * tfirst);
  r.w.front() += corr;
  r.w0 -= corr;
  r.w0 += std::pow(T0, h) / h;
  append_power_segment(r, T0, T1, h, order, width, false);
  return r;
}

// ---------------------------------------------------------------------------
// Functionals over a shared time grid.

struct SparseFunctional {
  std::map<double, double> w;  // time -> weight
  double w0 = 0.0;

  void add(double t, double c) {
    if (t <= 0.0)
      w0 += c;
    else
      w[t] += c;
  }

  void add_rule(const TimeRule& r, double coeff, double shift) {
    for (size_t i = 0; i < r.t.size(); ++i) add(shift + r.t[i], coeff * r.w[i]);
    add(shift, coeff * r.w0);
  }
};

SparseFunctional single(const TimeRule& r, double coeff) {
  SparseFunctional f;
  f.add_rule(r, coeff, 0.0);
  return f;
}

// Outer rule applied to the curve t -> (inner rule shifted by t). This is the
// whole content of the nested fractional integrals: semigroup composition
// turns P_t P_sigma into a single curve value at t + sigma.
SparseFunctional compose(const TimeRule& outer, const TimeRule& inner, double c_out,
                         double c_in) {
  SparseFunctional f;
  for (size_t k = 0; k < outer.t.size(); ++k)
    f.add_rule(inner, c_out * outer.w[k] * c_in, outer.t[k]);
  f.add_rule(inner, c_out * outer.w0 * c_in, 0.0);
  return f;
}

double abs_node_mass(const TimeRule& r) {
  double s = 0.0;
  for (double wi : r.w) s += std::abs(wi);
  return s;
}

// ---------------------------------------------------------------------------
// Curve engine: one Monte Carlo pass evaluating a batch of functionals of
// phi(u) = P_u f(X) with common random numbers across all times. Each time
// uses whichever representation has controlled variance:
//   kernel sampling   phi(u) ~ f(e^{uB} X + sqrt(2W(u)) Z)
//   kernel density    phi(u) ~ m * p(X, W, u),  (W, m) a mass sample of f.
// The density side takes over once log p varies little across the support of
// f, which is exactly where kernel sampling stops hitting the support.

struct CurvePoint {
  double t = 0.0;
  CovarianceBundle cb;
  Vector mean;
  bool density = false;
  bool cv = false;
};

class CurveEngine {
 public:
  CurveEngine(const OperatorSpec& spec, const ScalarField& f, const Vector& X)
      : spec_(spec), f_(f), X_(X), fX_(f(X)) {
    if (X.size() != spec.dim) throw InvalidInput("evaluation point has wrong dimension");
    mass_ok_ = mass_samplable(f);
    if (mass_ok_) supp_ = f.effective_support();
    // Numerical gradient at X for the small-time control variate. Any vector
    // works for unbiasedness (the subtracted mean is matched exactly); the
    // true gradient is what kills the O(sqrt(t)) sample noise.
    grad_ = Vector::Zero(spec.dim);
    double h = 1e-5 * (1.0 + X.cwiseAbs().maxCoeff());
    Vector Xp = X, Xm = X;
    for (int i = 0; i < spec.dim; ++i) {
      Xp[i] = X[i] + h;
      Xm[i] = X[i] - h;
      grad_[i] = (f_(Xp) - f_(Xm)) / (2.0 * h);
      Xp[i] = X[i];
      Xm[i] = X[i];
    }
  }

  void set_times(const std::vector<double>& times) {
    points_.clear();
    points_.reserve(times.size());
    col_.clear();
    for (double t : times) {
      CurvePoint p;
      p.t = t;
      p.cb = covariance(spec_, t);
      p.mean = p.cb.exp_tB * X_;
      p.density = mass_ok_ && density_good(p.cb, p.mean);
      if (!p.density) {
        // Centered rules carry weights ~ t^{-1-s} against phi(t) - phi(0),
        // whose per-sample spread is O(sqrt(t)); subtracting the linear part
        // of f turns that into O(t). Only helps while the sample cloud stays
        // inside the support scale; beyond it the raw values are already
        // bounded and the linear term would add O(sqrt(t)) noise instead.
        double lmax = sym_spectrum(2.0 * p.cb.gram).eigenvalues.maxCoeff();
        p.cv = !mass_ok_ || 9.0 * lmax <= supp_.radius * supp_.radius;
      }
      col_.emplace(t, static_cast<int>(points_.size()));
      points_.push_back(std::move(p));
    }
  }

  double f_at_x() const { return fX_; }

  std::vector<MCEstimate> evaluate(const std::vector<SparseFunctional>& fs, uint64_t n,
                                   uint64_t seed, int workers) const {
    const int nf = static_cast<int>(fs.size());
    const int nt = static_cast<int>(points_.size());
    Matrix Wm = Matrix::Zero(nf, nt);
    Vector w0(nf);
    for (int r = 0; r < nf; ++r) {
      w0[r] = fs[r].w0;
      for (const auto& [t, c] : fs[r].w) Wm(r, col_.at(t)) += c;
    }

    // Exact means of the subtracted linear parts, added back per functional.
    Vector dshift = Vector::Zero(nt);
    for (int c = 0; c < nt; ++c)
      if (points_[c].cv) dshift[c] = grad_.dot(points_[c].mean - X_);
    Vector bias = Wm * dshift;

    const int dim = spec_.dim;
    std::vector<double> sum, sumsq;
    mc_accumulate(n, nf, workers,
                  [&](uint64_t i, double* out) {
                    thread_local Vector z, phi, y;
                    z.resize(dim);
                    phi.resize(nt);
                    RandomStream rs(seed, streams::kFrac, i);
                    rs.fill_normal(z);
                    MassSample ms;
                    if (mass_ok_) ms = f_.sample_mass(rs);
                    for (int c = 0; c < nt; ++c) {
                      const CurvePoint& p = points_[c];
                      if (p.density) {
                        phi[c] = ms.weight * kernel_density(p.cb, dim, X_, ms.point);
                      } else {
                        y = p.mean + p.cb.sqrt_cov * z;
                        phi[c] = f_(y);
                        if (p.cv) phi[c] -= grad_.dot(y - X_);
                      }
                    }
                    for (int r = 0; r < nf; ++r)
                      out[r] = Wm.row(r).dot(phi) + w0[r] * fX_ + bias[r];
                  },
                  sum, sumsq);

    std::vector<MCEstimate> est(nf);
    for (int r = 0; r < nf; ++r) est[r] = reduce_mean(sum[r], sumsq[r], n, seed);
    return est;
  }

  static bool mass_samplable(const ScalarField& f) {
    if (f.kind() == ScalarField::Kind::Linear) return false;
    if (f.kind() == ScalarField::Kind::Sum)
      for (const auto& [c, g] : f.terms())
        if (!mass_samplable(g)) return false;
    return true;
  }

 private:
  // Density representation is safe when log p(X, ., t) moves by at most ~1/2
  // across the support ball of f in every eigendirection of 2W.
  bool density_good(const CovarianceBundle& cb, const Vector& mean) const {
    SymSpectrum sp = sym_spectrum(2.0 * cb.gram);
    Vector d = mean - supp_.center;
    for (int i = 0; i < d.size(); ++i) {
      double lam = sp.eigenvalues[i];
      double proj = std::abs(sp.eigenvectors.col(i).dot(d));
      if (supp_.radius * (proj + supp_.radius) > 0.5 * lam) return false;
    }
    return true;
  }

  const OperatorSpec& spec_;
  const ScalarField& f_;
  Vector X_;
  double fX_ = 0.0;
  Vector grad_;
  bool mass_ok_ = false;
  FieldSupport supp_;
  std::vector<CurvePoint> points_;
  std::map<double, int> col_;
};

std::vector<double> collect_times(const std::vector<const SparseFunctional*>& fs) {
  std::vector<double> ts;
  for (const auto* f : fs)
    for (const auto& [t, c] : f->w) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tail certificates. sup_X P_t g <= c_N ||g||_1 / V(t) bounds every discarded
// far-time piece; the remaining t-integral is controlled by the local
// log-log slope of V (measured over [T, 100T] and reduced by a margin),
// which is a valid lower bound once V has settled onto its final power law.

double local_volume_slope(const OperatorSpec& spec, double T) {
  std::vector<double> ts = log_space(T, 100.0 * T, 9);
  double pmin = kInf;
  double prev_lv = log_volume(spec, ts[0]);
  for (size_t i = 1; i < ts.size(); ++i) {
    double lv = log_volume(spec, ts[i]);
    pmin = std::min(pmin, (lv - prev_lv) / (std::log(ts[i]) - std::log(ts[i - 1])));
    prev_lv = lv;
  }
  return pmin - 0.05;
}

// Bound on c_N * mass * integral_T^inf t^{power-1} / V(t) dt, or +inf when
// the measured decay cannot certify convergence.
double volume_power_tail(const OperatorSpec& spec, double mass, double power,
                         double T) {
  double p = local_volume_slope(spec, T);
  if (p <= power + 0.02) return kInf;
  double logb = std::log(kernel_constant(spec.dim) * mass) - log_volume(spec, T) +
                power * std::log(T) - std::log(p - power);
  return std::exp(logb);
}

namespace {

// Smallest decade-stepped T1 >= T_start whose tail certificate (for the
// worst of the given powers) is below budget.
double settle_T1(const OperatorSpec& spec, double mass, const std::vector<double>& powers,
                 double T_start, double budget, double cap) {
  double T1 = T_start;
  for (;;) {
    double worst = 0.0;
    for (double p : powers) worst = std::max(worst, volume_power_tail(spec, mass, p, T1));
    if (worst <= budget) return T1;
    if (T1 >= cap) {
      if (std::isinf(worst))
        throw DivergentPotential(
            "volume growth too slow: the far-time integral does not converge");
      throw InsufficientCutoff(
          "far-time tail cannot be certified below budget before the time cap");
    }
    T1 *= 10.0;
  }
}

double field_l1(const ScalarField& f) {
  return f.lp_mass_bound(1);
}

// ||(-A)^s P_u f||_1 <= s/Gamma(1-s) [ ||A f||_1 / (1-s) + 2 ||f||_1 / s ],
// from the rate bound on ||P_{u+t} f - P_u f||_1 split at t = 1.
double frac_l1_bound(const OperatorSpec& spec, const ScalarField& f, double s,
                     uint64_t seed) {
  double a1 = generator_l1_estimate(spec, f, 8192, seed);
  return s / std::tgamma(1.0 - s) * (a1 / (1.0 - s) + 2.0 * field_l1(f) / s);
}

struct RulePairEval {
  double value = 0.0;       // refined rule
  double coarse = 0.0;      // coarse rule, for the quadrature error estimate
  double std_error = 0.0;   // refined rule
};

}  // namespace

// ---------------------------------------------------------------------------

FracResult balakrishnan_apply(const OperatorSpec& spec, const ScalarField& f,
                              const Vector& X, double s, const FracQuadSpec& q,
                              uint64_t n, uint64_t seed, int workers) {
  spec.validate();
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("fractional order must lie in (0,1)");
  double c = -s / std::tgamma(1.0 - s);
  double l1f = field_l1(f);

  double T1 = settle_T1(spec, l1f, {-s}, q.T1, q.tail_budget / std::abs(c), q.t_cap);
  double tail = std::abs(c) * volume_power_tail(spec, l1f, -s, T1);

  TimeRule coarse = bala_rule(s, T1, q.order, q.panel_width, 1.0);
  TimeRule fine = bala_rule(s, T1, q.order, q.panel_width * 0.5, 1e-4);
  std::vector<SparseFunctional> fs = {single(coarse, c), single(fine, c)};

  CurveEngine eng(spec, f, X);
  eng.set_times(collect_times({&fs[0], &fs[1]}));
  auto est = eng.evaluate(fs, n, seed, workers);

  FracResult out;
  out.value = est[1].value;
  out.std_error = est[1].std_error;
  out.quad_error = std::abs(est[0].value - est[1].value) + tail;
  out.tail_bound = tail;
  out.n = n;
  out.seed = seed;
  return out;
}

FracResult riesz_apply(const OperatorSpec& spec, const ScalarField& f,
                       const Vector& X, double alpha, const FracQuadSpec& q,
                       uint64_t n, uint64_t seed, int workers) {
  spec.validate();
  if (!(alpha > 0.0)) throw InvalidInput("riesz order must be positive");
  DimensionReport dims = intrinsic_dimensions(spec);
  if (!(alpha < dims.Dinf - 0.05))
    throw DivergentPotential("riesz potential diverges: order " + std::to_string(alpha) +
                             " is not below the large-time dimension " +
                             std::to_string(dims.Dinf));
  double h = alpha / 2.0;
  double c = 1.0 / std::tgamma(h);
  double l1f = field_l1(f);

  double T1 = settle_T1(spec, l1f, {h}, q.T1, q.tail_budget / c, q.t_cap);
  double tail = c * volume_power_tail(spec, l1f, h, T1);

  TimeRule coarse = riesz_rule(alpha, q.T0, T1, q.order, q.panel_width, 1.0);
  TimeRule fine = riesz_rule(alpha, q.T0, T1, q.order, q.panel_width * 0.5, 1e-4);
  std::vector<SparseFunctional> fs = {single(coarse, c), single(fine, c)};

  CurveEngine eng(spec, f, X);
  eng.set_times(collect_times({&fs[0], &fs[1]}));
  auto est = eng.evaluate(fs, n, seed, workers);

  FracResult out;
  out.value = est[1].value;
  out.std_error = est[1].std_error;
  out.quad_error = std::abs(est[0].value - est[1].value) + tail;
  out.tail_bound = tail;
  out.n = n;
  out.seed = seed;
  return out;
}

InversionReport inversion_residual(const OperatorSpec& spec, const ScalarField& f,
                                   const Vector& X, double s, const FracQuadSpec& q,
                                   uint64_t n, uint64_t seed, int workers) {
  spec.validate();
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("fractional order must lie in (0,1)");
  DimensionReport dims = intrinsic_dimensions(spec);
  if (!(2.0 * s < dims.Dinf - 0.05))
    throw DivergentPotential("inversion needs 2s below the large-time dimension " +
                             std::to_string(dims.Dinf));

  double cb = -s / std::tgamma(1.0 - s);  // balakrishnan scale
  double cr = 1.0 / std::tgamma(s);       // riesz scale, alpha = 2s
  double l1f = field_l1(f);
  double mf = frac_l1_bound(spec, f, s, seed);

  // One T1 serves every segment: the inner balakrishnan tails (power -s),
  // the riesz-side curve integrals (power s), and the outer tails.
  double budget = q.tail_budget / (std::abs(cb) + cr + std::abs(cb) * cr);
  double T1 = settle_T1(spec, std::max(l1f, mf), {-s, s}, q.T1, budget, q.t_cap);

  double fw = q.panel_width, cw = fw / 0.65;  // refined vs coarse widths

  // Route A: I_{2s} applied to (-A)^s f. Outer riesz rule in sigma over the
  // curve psi(sigma) = (-A)^s P_sigma f(X), inner balakrishnan rule shifted.
  TimeRule outA_c = riesz_rule(2.0 * s, q.T0, T1, q.order, cw, 1.0);
  TimeRule outA_f = riesz_rule(2.0 * s, q.T0, T1, q.order, fw, 1e-4);
  TimeRule inA_c = bala_rule(s, T1, q.order, cw, 1.0);
  TimeRule inA_f = bala_rule(s, T1, q.order, fw, 1e-4);

  // Route B: (-A)^s applied to I_{2s} f. Outer balakrishnan rule in t over
  // the curve Phi(t) = P_t I_{2s} f(X), inner riesz rule shifted.
  TimeRule outB_c = bala_rule(s, T1, q.order, cw, 1.0);
  TimeRule outB_f = bala_rule(s, T1, q.order, fw, 1e-4);
  TimeRule inB_c = riesz_rule(2.0 * s, q.T0, T1, q.order, cw, 1.0);
  TimeRule inB_f = riesz_rule(2.0 * s, q.T0, T1, q.order, fw, 1e-4);

  std::vector<SparseFunctional> fs = {
      compose(outA_c, inA_c, cr, cb), compose(outA_f, inA_f, cr, cb),
      compose(outB_c, inB_c, cb, cr), compose(outB_f, inB_f, cb, cr)};

  CurveEngine eng(spec, f, X);
  eng.set_times(collect_times({&fs[0], &fs[1], &fs[2], &fs[3]}));
  auto est = eng.evaluate(fs, n, seed, workers);

  // Discarded tails: inner balakrishnan tails aggregate over the outer node
  // mass, the outer tails use the L1 bounds on (-A)^s P f and P I f.
  double in_tail = volume_power_tail(spec, l1f, -s, T1);
  double outA_tail = volume_power_tail(spec, mf * std::pow(2.0, s), s, T1 / 2.0);
  double slope = local_volume_slope(spec, T1);
  double outB_tail = kernel_constant(spec.dim) * l1f /
                     (std::tgamma(s) * s * volume(spec, T1)) *
                     (1.0 / slope + 1.0 / (slope - s));
  double tailA = cr * (abs_node_mass(outA_f) * std::abs(cb) * in_tail) + cr * outA_tail;
  double tailB = std::abs(cb) * (abs_node_mass(outB_f) * cr * in_tail) +
                 std::abs(cb) * outB_tail;

  InversionReport rep;
  rep.riesz_of_frac = est[1].value;
  rep.frac_of_riesz = est[3].value;
  rep.f_at_X = eng.f_at_x();
  double denom = std::abs(rep.f_at_X) + 1.0;
  rep.residual_rf = std::abs(rep.riesz_of_frac - rep.f_at_X) / denom;
  rep.residual_fr = std::abs(rep.frac_of_riesz - rep.f_at_X) / denom;
  rep.std_error = std::max(est[1].std_error, est[3].std_error);
  rep.quad_error = std::abs(est[0].value - est[1].value) +
                   std::abs(est[2].value - est[3].value);
  rep.tail_bound = tailA + tailB;
  return rep;
}

AdditivityReport additivity_residual(const OperatorSpec& spec, const ScalarField& f,
                                     const Vector& X, double s1, double s2,
                                     const FracQuadSpec& q, uint64_t n, uint64_t seed,
                                     int workers) {
  spec.validate();
  if (!(s1 > 0.0 && s2 > 0.0 && s1 + s2 < 1.0))
    throw InvalidInput("additivity needs s1, s2 > 0 with s1 + s2 < 1");
  double c1 = -s1 / std::tgamma(1.0 - s1);
  double c2 = -s2 / std::tgamma(1.0 - s2);
  double c12 = -(s1 + s2) / std::tgamma(1.0 - s1 - s2);
  double l1f = field_l1(f);
  double mf2 = frac_l1_bound(spec, f, s2, seed);

  double budget = q.tail_budget / (std::abs(c12) + std::abs(c1 * c2));
  double T1 = settle_T1(spec, std::max(l1f, mf2), {-s1, -s2, -s1 - s2}, q.T1, budget,
                        q.t_cap);

  double fw = q.panel_width, cw = fw / 0.65;

  TimeRule dir_c = bala_rule(s1 + s2, T1, q.order, cw, 1.0);
  TimeRule dir_f = bala_rule(s1 + s2, T1, q.order, fw, 1e-4);
  TimeRule out_c = bala_rule(s1, T1, q.order, cw, 1.0);
  TimeRule out_f = bala_rule(s1, T1, q.order, fw, 1e-4);
  TimeRule in_c = bala_rule(s2, T1, q.order, cw, 1.0);
  TimeRule in_f = bala_rule(s2, T1, q.order, fw, 1e-4);

  std::vector<SparseFunctional> fs = {single(dir_c, c12), single(dir_f, c12),
                                      compose(out_c, in_c, c1, c2),
                                      compose(out_f, in_f, c1, c2)};

  CurveEngine eng(spec, f, X);
  eng.set_times(collect_times({&fs[0], &fs[1], &fs[2], &fs[3]}));
  auto est = eng.evaluate(fs, n, seed, workers);

  double in_tail = volume_power_tail(spec, l1f, -s2, T1);
  double out_tail = volume_power_tail(spec, mf2 * std::pow(2.0, -s1), -s1, T1 / 2.0);
  double dir_tail = std::abs(c12) * volume_power_tail(spec, l1f, -s1 - s2, T1);
  double comp_tail =
      std::abs(c1) * (abs_node_mass(out_f) * std::abs(c2) * in_tail + out_tail);

  AdditivityReport rep;
  rep.direct = est[1].value;
  rep.composed = est[3].value;
  rep.residual = std::abs(rep.direct - rep.composed);
  rep.std_error = std::max(est[1].std_error, est[3].std_error);
  rep.quad_error = std::abs(est[0].value - est[1].value) +
                   std::abs(est[2].value - est[3].value) + dir_tail + comp_tail;
  return rep;
}

// ---------------------------------------------------------------------------
// Difference-of-powers kernel.

double ell_kernel(double sigma, double t, double tau, double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("kernel order must lie in (0,1)");
  double g = std::tgamma(s);
  double a = sigma > t ? std::pow(sigma - t, s - 1.0) : 0.0;
  double b = sigma > tau ? std::pow(sigma - tau, s - 1.0) : 0.0;
  return (a - b) / g;
}

double ell_l1_closed(double t, double tau, double s) {
  return 2.0 * std::pow(std::abs(t - tau), s) / std::tgamma(1.0 + s);
}

double ell_l1(double t, double tau, double s, double tol) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidInput("kernel order must lie in (0,1)");
  double m = std::min(t, tau), M = std::max(t, tau), d = M - m;
  if (d == 0.0) return 0.0;
  double g = std::tgamma(s);
  double scale = std::pow(d, s) / g;
  double piece_tol = tol * std::max(scale, 1e-300) / 4.0;

  // (m, M): only the branch singular at m is active, and u = (sigma - m)^s
  // turns it into the exact constant 1/(s Gamma(s)); integrate directly.
  double p1 = std::pow(d, s) / (s * g);

  // (M, M + d): both branches active, singular at M; u = (sigma - M)^s.
  // Work in the offset v = sigma - M: forming sigma = M + v and subtracting
  // M back out inside the kernel wipes v out near the singularity. After
  // the substitution the singular branch cancels the Jacobian exactly,
  // leaving 1 - ((v + d)/v)^{s-1}.
  auto seg2 = [&](double u) {
    if (u <= 0.0) return 1.0 / (s * g);
    double v = std::pow(u, 1.0 / s);
    return (1.0 - std::pow(1.0 + d / v, s - 1.0)) / (s * g);
  };
  double p2 = adaptive_simpson(seg2, 0.0, std::pow(d, s), piece_tol).value;

  // (M + d, M + d e^U): smooth decaying difference, log substitution. The
  // naive power difference x^{s-1} - (x+d)^{s-1} cancels catastrophically for
  // x >> d, so evaluate it through expm1/log1p.
  double U = 28.0;
  auto seg3 = [&](double u) {
    double x = d * std::exp(u);
    double diff = -std::pow(x, s - 1.0) *
                  std::expm1((s - 1.0) * std::log1p(d / x)) / g;
    return diff * x;
  };
  double p3 = adaptive_simpson(seg3, 0.0, U, piece_tol).value;

  // Remainder beyond x = d e^U from the exact antiderivative, evaluated
  // cancellation-free.
  double Xc = d * std::exp(U);
  double rem = std::pow(Xc, s) * std::expm1(s * std::log1p(d / Xc)) / (s * g);

  return p1 + p2 + p3 + rem;
}

// ---------------------------------------------------------------------------
// || (-A)^s P_sigma f ||_p and the decay estimate built from it.

namespace {

// Anisotropic mixture built from propagated gaussian shapes; used to sample X
// where the integrand of the norm actually lives.
struct ShapeMixture {
  struct Comp {
    Vector mu;
    Matrix chol;
    Matrix prec;
    double log_norm = 0.0;  // log of the density normalizer
    double weight = 0.0;
  };
  std::vector<Comp> comps;

  void add(const ScalarField& gauss, double weight) {
    Comp c;
    c.mu = gauss.gaussian_mean();
    Matrix cov = gauss.gaussian_cov();
    c.chol = psd_sqrt(cov);
    c.prec = cov.inverse();
    int nd = static_cast<int>(c.mu.size());
    c.log_norm = -0.5 * (nd * std::log(2.0 * M_PI) + logdet_spd(cov));
    c.weight = weight;
    comps.push_back(std::move(c));
  }

  void normalize() {
    double s = 0.0;
    for (auto& c : comps) s += c.weight;
    if (s <= 0.0) throw InvalidInput("shape mixture has no mass");
    for (auto& c : comps) c.weight /= s;
  }

  double pdf(const Vector& X) const {
    double p = 0.0;
    for (const auto& c : comps) {
      Vector d = X - c.mu;
      p += c.weight * std::exp(c.log_norm - 0.5 * d.dot(c.prec * d));
    }
    return p;
  }

  Vector sample(RandomStream& rs) const {
    double u = rs.u01(), acc = 0.0;
    size_t pick = comps.size() - 1;
    for (size_t i = 0; i < comps.size(); ++i) {
      acc += comps[i].weight;
      if (u < acc) {
        pick = i;
        break;
      }
    }
    const Comp& c = comps[pick];
    Vector z(c.mu.size());
    rs.fill_normal(z);
    return c.mu + c.chol * z;
  }
};

}  // namespace

MCEstimate frac_power_norm(const OperatorSpec& spec, const ScalarField& f,
                           double sigma, double s, int p, const FracQuadSpec& q,
                           uint64_t n, uint64_t seed, int workers) {
  spec.validate();
  if (!(sigma > 0.0)) throw InvalidInput("sigma must be positive");
  if (p != 1 && p != 2) throw InvalidInput("only p = 1 and p = 2 are supported");
  double c = -s / std::tgamma(1.0 - s);
  double l1f = field_l1(f);
  double T1 = settle_T1(spec, l1f, {-s}, q.T1, q.tail_budget / std::abs(c), q.t_cap);
  TimeRule rule = bala_rule(s, T1, q.order, q.panel_width * 0.7, 1e-2);

  const int nt = static_cast<int>(rule.t.size());
  const int dim = spec.dim;

  if (f.closed_under_semigroup()) {
    // psi(X) = c [ sum_k w_k g_{sigma+t_k}(X) + w0 g_sigma(X) ] with each g a
    // closed-form propagated field; the only noise left is the X sampling.
    std::vector<ScalarField> fields;
    fields.reserve(nt + 1);
    std::vector<double> coef;
    fields.push_back(f.propagate(covariance(spec, sigma)));
    coef.push_back(c * rule.w0);
    for (int k = 0; k < nt; ++k) {
      fields.push_back(f.propagate(covariance(spec, sigma + rule.t[k])));
      coef.push_back(c * rule.w[k]);
    }

    // Importance density: gaussian shapes weighted by |coef| * mass, thinned
    // to a manageable component count. Sums contribute their gaussian terms.
    ShapeMixture mix;
    auto add_shapes = [&mix](const ScalarField& g, double weight, auto&& self) -> void {
      if (g.kind() == ScalarField::Kind::Gaussian) {
        mix.add(g, weight * g.lp_mass_bound(1) + 1e-300);
      } else if (g.kind() == ScalarField::Kind::Sum) {
        for (const auto& [cw, term] : g.terms())
          self(term, weight * std::abs(cw), self);
      }
    };
    int stride = std::max(1, (nt + 1) / 32);
    for (size_t j = 0; j < fields.size(); j += stride)
      add_shapes(fields[j], std::abs(coef[j]), add_shapes);
    if (mix.comps.empty()) throw SamplerCoverage("no gaussian shapes to sample from");
    mix.normalize();

    std::vector<double> sum, sumsq;
    mc_accumulate(n, 1, workers,
                  [&](uint64_t i, double* out) {
                    RandomStream rs(seed, streams::kNorm, i);
                    Vector X = mix.sample(rs);
                    double qx = mix.pdf(X);
                    double psi = 0.0;
                    for (size_t j = 0; j < fields.size(); ++j)
                      psi += coef[j] * fields[j](X);
                    out[0] = std::pow(std::abs(psi), p) / qx;
                  },
                  sum, sumsq);
    MCEstimate mp = reduce_mean(sum[0], sumsq[0], n, seed);
    MCEstimate out;
    out.n = n;
    out.seed = seed;
    out.value = std::pow(std::max(mp.value, 0.0), 1.0 / p);
    if (mp.value > 0.0)
      out.std_error = out.value * mp.std_error / (p * mp.value);
    return out;
  }

  // Generic fields: inner Monte Carlo for the curve values, common random
  // numbers across times per X. The inner noise folds into |psi|^p upward,
  // which only makes upper-bound checks harder, never easier.
  FieldSupport supp = f.effective_support();
  CovarianceBundle mid = covariance(spec, sigma + 1.0);
  double spread = std::sqrt(sym_spectrum(2.0 * mid.gram).max_eig);
  GaussianMixture::Component comp;
  comp.center = supp.center;
  comp.sigma = supp.radius + spread;
  comp.weight = 1.0;
  GaussianMixture qmix({comp});

  const uint64_t n_in = 512;
  std::vector<CovarianceBundle> cbs;
  cbs.reserve(nt + 1);
  cbs.push_back(covariance(spec, sigma));
  for (int k = 0; k < nt; ++k) cbs.push_back(covariance(spec, sigma + rule.t[k]));

  std::vector<double> sum, sumsq;
  mc_accumulate(n, 1, workers,
                [&](uint64_t i, double* out) {
                  RandomStream rs(seed, streams::kNorm, i);
                  Vector X = qmix.sample(rs);
                  double qx = qmix.pdf(X);
                  thread_local Vector z, y;
                  z.resize(dim);
                  std::vector<double> phi(nt + 1, 0.0);
                  for (uint64_t j = 0; j < n_in; ++j) {
                    RandomStream ri(seed, streams::kChapmanInner, i * n_in + j);
                    ri.fill_normal(z);
                    for (int k = 0; k <= nt; ++k) {
                      y = cbs[k].exp_tB * X + cbs[k].sqrt_cov * z;
                      phi[k] += f(y);
                    }
                  }
                  for (auto& v : phi) v /= static_cast<double>(n_in);
                  double psi = c * rule.w0 * phi[0];
                  for (int k = 0; k < nt; ++k) psi += c * rule.w[k] * phi[k + 1];
                  out[0] = std::pow(std::abs(psi), p) / qx;
                },
                sum, sumsq);
  MCEstimate mp = reduce_mean(sum[0], sumsq[0], n, seed);
  MCEstimate out;
  out.n = n;
  out.seed = seed;
  out.value = std::pow(std::max(mp.value, 0.0), 1.0 / p);
  if (mp.value > 0.0) out.std_error = out.value * mp.std_error / (p * mp.value);
  return out;
}

LedouxReport ledoux_check(const OperatorSpec& spec, const ScalarField& f, int p,
                          double t, double tau, double s,
                          const std::vector<double>& sigma_grid,
                          const FracQuadSpec& q, uint64_t n, uint64_t seed,
                          int workers) {
  spec.validate();
  if (!(t > 0.0 && tau > 0.0)) throw InvalidInput("times must be positive");
  if (sigma_grid.empty()) throw InvalidInput("sigma grid must not be empty");

  LedouxReport rep;
  rep.sigma_grid = sigma_grid;
  rep.kernel_l1 = ell_l1_closed(t, tau, s);

  // Left side: || P_t f - P_tau f ||_p, exact propagation when available.
  if (f.closed_under_semigroup()) {
    ScalarField ft = f.propagate(covariance(spec, t));
    ScalarField ftau = f.propagate(covariance(spec, tau));
    MCEstimate lhs = lp_distance(ft, ftau, p, n, seed, workers);
    rep.lhs = lhs.value;
    rep.lhs_err = lhs.std_error;
  } else {
    // Inner-MC version; the folded inner noise biases the lhs upward, which
    // is the conservative direction for this inequality.
    FieldSupport supp = f.effective_support();
    double spread = std::sqrt(
        sym_spectrum(2.0 * covariance(spec, std::max(t, tau)).gram).max_eig);
    GaussianMixture::Component comp;
    comp.center = supp.center;
    comp.sigma = supp.radius + spread;
    comp.weight = 1.0;
    GaussianMixture qmix({comp});
    CovarianceBundle cbt = covariance(spec, t), cbtau = covariance(spec, tau);
    const uint64_t n_in = 512;
    const int dim = spec.dim;
    std::vector<double> sum, sumsq;
    mc_accumulate(n, 1, workers,
                  [&](uint64_t i, double* out) {
                    RandomStream rs(seed, streams::kLp, i);
                    Vector X = qmix.sample(rs);
                    double qx = qmix.pdf(X);
                    thread_local Vector z, y;
                    z.resize(dim);
                    double a = 0.0, b = 0.0;
                    for (uint64_t j = 0; j < n_in; ++j) {
                      RandomStream ri(seed, streams::kChapmanInner, i * n_in + j);
                      ri.fill_normal(z);
                      y = cbt.exp_tB * X + cbt.sqrt_cov * z;
                      a += f(y);
                      y = cbtau.exp_tB * X + cbtau.sqrt_cov * z;
                      b += f(y);
                    }
                    double diff = (a - b) / static_cast<double>(n_in);
                    out[0] = std::pow(std::abs(diff), p) / qx;
                  },
                  sum, sumsq);
    MCEstimate mp = reduce_mean(sum[0], sumsq[0], n, seed);
    rep.lhs = std::pow(std::max(mp.value, 0.0), 1.0 / p);
    if (mp.value > 0.0) rep.lhs_err = rep.lhs * mp.std_error / (p * mp.value);
  }

  // Right side: sup over the sigma grid of || (-A)^s P_sigma f ||_p.
  for (size_t j = 0; j < sigma_grid.size(); ++j) {
    MCEstimate nm =
        frac_power_norm(spec, f, sigma_grid[j], s, p, q, n, seed + j + 1, workers);
    rep.norms.push_back(nm.value);
    rep.norm_errs.push_back(nm.std_error);
  }
  rep.monotone = true;
  for (size_t j = 0; j + 1 < rep.norms.size(); ++j)
    if (rep.norms[j + 1] >
        rep.norms[j] + 3.0 * (rep.norm_errs[j] + rep.norm_errs[j + 1]))
      rep.monotone = false;

  size_t arg = 0;
  for (size_t j = 1; j < rep.norms.size(); ++j)
    if (rep.norms[j] > rep.norms[arg]) arg = j;
  rep.sup_norm = rep.norms[arg];
  rep.sup_norm_err = rep.norm_errs[arg];
  rep.rhs = rep.kernel_l1 * rep.sup_norm;

  double rel = (rep.lhs_err + rep.kernel_l1 * rep.sup_norm_err) /
               std::max(rep.rhs, 1e-300);
  rep.ok = rep.lhs <= rep.rhs * (1.0 + 5.0 * rel);
  return rep;
}

double generator_l1_estimate(const OperatorSpec& spec, const ScalarField& f,
                             uint64_t n, uint64_t seed) {
  GaussianMixture qmix = GaussianMixture::covering({&f});
  double acc = 0.0;
  for (uint64_t i = 0; i < n; ++i) {
    RandomStream rs(seed, streams::kNorm, i);
    Vector X = qmix.sample(rs);
    acc += std::abs(f.generator_apply(spec, X)) / qmix.pdf(X);
  }
  // Inflated: this feeds tail certificates, so lean high.
  return 1.25 * acc / static_cast<double>(n) + 1e-12;
}

}  // namespace kfp
