#pragma once

#include <string>
#include <vector>

#include "kfp/fractional.hpp"
#include "kfp/operator_model.hpp"
#include "kfp/parallel.hpp"
#include "kfp/region.hpp"

namespace kfp {

// Two independent estimators of the heat-content deficit
// d(t) = || P_t 1_E - 1_E ||_1. Identity uses
// d(t) = (1 + e^{-t tr B})|E| - 2 int_E P_t 1_E and samples only inside E;
// Direct integrates |P_t 1_E - 1_E| over E and an importance box around it.
enum class DeficitRoute { Identity, Direct };

MCEstimate heat_content_deficit(const OperatorSpec& spec, const Region& E,
                                double t, uint64_t n, uint64_t seed,
                                int workers = default_workers(),
                                DeficitRoute route = DeficitRoute::Identity);

// d(t) on a time grid with common random numbers: one set of start points
// X_i ~ U(E) and one set of kernel draws drives every t, so the curve is
// smooth per sample and differences across t carry little extra noise.
// n is the two-level budget per time node (n_out = n_in = floor(sqrt(n))).
std::vector<MCEstimate> deficit_curve(const OperatorSpec& spec, const Region& E,
                                      const std::vector<double>& ts, uint64_t n,
                                      uint64_t seed,
                                      int workers = default_workers());

struct PerimeterEstimate {
  double s = 0.0;
  double value = 0.0;       // estimate of || (-A)^s 1_E ||_1
  double quad_error = 0.0;  // grid refinement + far-tail bracket + cut pieces
  double mc_error = 0.0;    // propagated sampling error
  double beta = 0.0;        // fitted small-time exponent of the deficit
  bool divergence_warning = false;  // beta <= s: non-integrable small-time fit
  std::vector<double> times;
  std::vector<MCEstimate> deficit;  // sampled deficit curve on `times`
};

// || (-A)^s 1_E ||_1 = s/Gamma(1-s) * integral t^{-1-s} d(t) dt, for
// 0 < s < 1/2 and tr B >= 0. The grid integral runs in log t; below the
// smallest grid time the deficit is extrapolated by the power law fitted on
// the smallest decade, and past the largest time the integrand is bracketed
// between the exact mass bound and the same bound minus a kernel-flatness
// correction.
PerimeterEstimate frac_perimeter(const OperatorSpec& spec, const Region& E,
                                 double s, const FracQuadSpec& q, uint64_t n,
                                 uint64_t seed, int workers = default_workers());

struct PerBelowReport {
  double lhs = 0.0;  // measured d(t)
  double lhs_err = 0.0;
  double rhs = 0.0;  // |E| - b_N/V(t/2) e^{-t/4 tr B} |E|^2
  double margin = 0.0;  // lhs - rhs
};

// Quantitative lower bound on the deficit with the explicit constant
// b_N = 2 a_N from the squared-kernel mass identity.
PerBelowReport perbelow_gap(const OperatorSpec& spec, const Region& E, double t,
                            uint64_t n, uint64_t seed,
                            int workers = default_workers());

// Closed-form minimizer of H(t) = a t^s + b t^{-D/2} and a golden-section
// cross-check of it on a bracketing interval.
double h_minimizer(double a, double b, double D, double s);
double h_minimizer_numeric(double a, double b, double D, double s,
                           double rel_tol = 1e-9);

// Set-independent isoperimetric constant i(s) produced by the interpolation
// chain under the measured volume regime: per(E) >= i(s) * min{
// |E|^{(D0-2s)/D0}, |E|^{(Dinf-2s)/Dinf} } for every finite-measure E. The
// exponents are the ones the constant is valid for (equal when single).
struct ImpliedConstant {
  std::string regime;  // "single" or "two"
  double D0 = 0.0, Dinf = 0.0;
  double gamma = 0.0;  // fitted volume growth constant
  double value = 0.0;
};
ImpliedConstant implied_iso_constant(const OperatorSpec& spec, double s);

struct InterpolationReport {
  std::string regime;      // "single" or "two"
  std::string case_label;  // single: "min"; two-regime: "(i)", "(ii)", "(iii)"
  double D0 = 0.0, Dinf = 0.0;
  double gamma = 0.0;      // fitted volume growth constant
  double t_star = 0.0;     // evaluation time of H
  double t_numeric = 0.0;  // golden-section minimizer (single regime)
  double H_at_t = 0.0;
  bool measure_bounded = false;  // |E| <= H(t_star)
  double i_emp = 0.0;      // per_value / min{|E|^{(D0-2s)/D0}, |E|^{(Dinf-2s)/Dinf}}
  double i_implied = 0.0;  // constant guaranteed by the interpolation chain
};

// Interpolation step between the t^s upper bound and the volume lower bound
// on the deficit: evaluates H at the minimizer (single volume regime) or at
// the case time prescribed by the two-regime split, checks |E| <= H, and
// reports both the observed and the guaranteed isoperimetric constants.
InterpolationReport interpolation_bound(const OperatorSpec& spec, const Region& E,
                                        double s, double per_value);

struct IsoRow {
  double measure = 0.0;
  double s = 0.0;
  double per_value = 0.0;
  double quad_err = 0.0;
  double mc_err = 0.0;
  double ratio = 0.0;  // per_value / min{|E|^{(D0-2s)/D0}, |E|^{(Dinf-2s)/Dinf}}
};

struct IsoSweep {
  std::vector<IsoRow> rows;
  double min_ratio = 0.0;
  double max_rel_spread = 0.0;  // max |ratio - mean| / mean
  bool homogeneous = false;     // single power law: constancy is meaningful
};

// Isoperimetric-ratio sweep over a family of regions at fixed s.
IsoSweep iso_ratio_sweep(const OperatorSpec& spec,
                         const std::vector<RegionPtr>& family, double s,
                         const FracQuadSpec& q, uint64_t n, uint64_t seed,
                         int workers = default_workers());

struct BbmReport {
  double lhs = 0.0;      // frac_perimeter value
  double lhs_err = 0.0;  // its combined error
  double rhs = 0.0;      // 2^{1-2s} s/Gamma(1-s) |E|^{1-2s} sup^{2s} {1/(1/2-s)+1/s}
  double rhs_err = 0.0;
  double sup_ratio = 0.0;  // sup_tau tau^{-1/2} d(tau) over the deficit grid
  double sup_ratio_err = 0.0;
  double half_order_lhs = 0.0;  // (1/2 - s) * lhs, finite as s -> 1/2
  double gauss_sup = 0.0;       // sup_tau (4 pi tau)^{-1/2} d(tau)
  double gauss_sup_err = 0.0;
  bool ok = false;  // lhs <= rhs within 5x combined relative error
};

// Upper bound of the bounded-variation type: the s-perimeter is controlled
// by |E| and sup_tau tau^{-1/2} d(tau), with the constant blowing up only
// like 1/(1/2 - s).
BbmReport bbm_upper_bound(const OperatorSpec& spec, const Region& E, double s,
                          const FracQuadSpec& q, uint64_t n, uint64_t seed,
                          int workers = default_workers());

}  // namespace kfp
