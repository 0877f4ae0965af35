#pragma once

#include <vector>

#include "kfp/semigroup.hpp"

namespace kfp {

// Quadrature layout for the time integrals behind fractional powers.
// Integrals run in log time with Gauss-Legendre panels; the near-zero end is
// cut where the linear-in-t bound on P_t f - f makes the remainder
// negligible, and the far end is cut at T1 with an analytic ultracontractive
// tail certificate. T1 is extended automatically (up to t_cap) until the
// certificate drops below tail_budget.
struct FracQuadSpec {
  double T0 = 1.0;
  double T1 = 1e4;
  int order = 6;            // GL order per panel
  double panel_width = 2.0; // panel width in log t
  double tail_budget = 5e-4;
  double t_cap = 1e12;
};

struct FracResult {
  double value = 0.0;
  double std_error = 0.0;   // Monte Carlo
  double quad_error = 0.0;  // panel-refinement difference + cut remainders
  double tail_bound = 0.0;  // certified bound on the discarded far tail
  uint64_t n = 0;
  uint64_t seed = 0;
};

// (-A)^s f(X) = -s/Gamma(1-s) * integral t^{-1-s} (P_t f(X) - f(X)) dt.
FracResult balakrishnan_apply(const OperatorSpec& spec, const ScalarField& f,
                              const Vector& X, double s, const FracQuadSpec& q,
                              uint64_t n, uint64_t seed,
                              int workers = default_workers());

// Riesz potential I_alpha f(X) = 1/Gamma(alpha/2) * integral t^{alpha/2-1}
// P_t f(X) dt; requires alpha strictly below the large-time intrinsic
// dimension (throws DivergentPotential otherwise).
FracResult riesz_apply(const OperatorSpec& spec, const ScalarField& f,
                       const Vector& X, double alpha, const FracQuadSpec& q,
                       uint64_t n, uint64_t seed, int workers = default_workers());

struct InversionReport {
  double riesz_of_frac = 0.0;  // I_{2s}((-A)^s f)(X)
  double frac_of_riesz = 0.0;  // (-A)^s(I_{2s} f)(X)
  double f_at_X = 0.0;
  double residual_rf = 0.0;    // |riesz_of_frac - f(X)| / (|f(X)| + 1)
  double residual_fr = 0.0;
  double std_error = 0.0;
  double quad_error = 0.0;
  double tail_bound = 0.0;
};

// Both composition orders of the inversion identity, sharing one sample set.
InversionReport inversion_residual(const OperatorSpec& spec, const ScalarField& f,
                                   const Vector& X, double s,
                                   const FracQuadSpec& q, uint64_t n,
                                   uint64_t seed, int workers = default_workers());

struct AdditivityReport {
  double direct = 0.0;    // (-A)^{s1+s2} f(X)
  double composed = 0.0;  // (-A)^{s1} ((-A)^{s2} f)(X)
  double residual = 0.0;
  double std_error = 0.0;
  double quad_error = 0.0;
};

AdditivityReport additivity_residual(const OperatorSpec& spec, const ScalarField& f,
                                     const Vector& X, double s1, double s2,
                                     const FracQuadSpec& q, uint64_t n,
                                     uint64_t seed, int workers = default_workers());

// Difference-of-powers kernel: l_s(sigma; t, tau) =
// [ (sigma-t)_+^{s-1} - (sigma-tau)_+^{s-1} ] / Gamma(s).
double ell_kernel(double sigma, double t, double tau, double s);

// integral |l_s| d sigma = 2 |t-tau|^s / Gamma(1+s).
double ell_l1_closed(double t, double tau, double s);

// Same integral by adaptive quadrature: power substitutions at the two
// singular endpoints and an inverse-power substitution on the tail.
double ell_l1(double t, double tau, double s, double tol = 1e-10);

// || (-A)^s P_sigma f ||_p by importance sampling in X; the inner fractional
// power is evaluated through the time-shifted curve P_u f(X) (exact for
// fields closed under the semigroup, inner Monte Carlo otherwise).
MCEstimate frac_power_norm(const OperatorSpec& spec, const ScalarField& f,
                           double sigma, double s, int p, const FracQuadSpec& q,
                           uint64_t n, uint64_t seed,
                           int workers = default_workers());

struct LedouxReport {
  double lhs = 0.0;  // || P_t f - P_tau f ||_p
  double lhs_err = 0.0;
  double rhs = 0.0;  // 2|t-tau|^s/Gamma(1+s) * sup_sigma || (-A)^s P_sigma f ||_p
  double kernel_l1 = 0.0;
  double sup_norm = 0.0;
  double sup_norm_err = 0.0;
  std::vector<double> sigma_grid;
  std::vector<double> norms;
  std::vector<double> norm_errs;
  bool monotone = false;  // norms non-increasing along the grid within error
  bool ok = false;        // lhs <= rhs within 5x the combined relative error
};

LedouxReport ledoux_check(const OperatorSpec& spec, const ScalarField& f, int p,
                          double t, double tau, double s,
                          const std::vector<double>& sigma_grid,
                          const FracQuadSpec& q, uint64_t n, uint64_t seed,
                          int workers = default_workers());

// Rough ||A f||_1 estimate (importance MC over the field's support); feeds
// the tail certificates of the composed quadratures.
double generator_l1_estimate(const OperatorSpec& spec, const ScalarField& f,
                             uint64_t n, uint64_t seed);

// Conservative lower bound for the log-log slope of V on [T, 100T] (grid
// minimum minus a safety margin). V is nondecreasing, so this certifies the
// far-time growth rate.
double local_volume_slope(const OperatorSpec& spec, double T);

// Bound on c_N * mass * integral_T^inf t^{power-1} / V(t) dt, or +inf when
// the measured volume growth cannot certify convergence.
double volume_power_tail(const OperatorSpec& spec, double mass, double power,
                         double T);

}  // namespace kfp
