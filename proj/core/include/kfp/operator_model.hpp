#pragma once

#include <string>
#include <vector>

#include "kfp/matlin.hpp"

namespace kfp {

// Constant-coefficient degenerate diffusion operator
//   A u = tr(Q D^2 u) + <B X, grad u>
// with Q symmetric PSD. Everything in the library is derived from (Q, B).
struct OperatorSpec {
  int dim = 0;
  Matrix Q;
  Matrix B;
  std::string name;

  double trace_B() const { return B.trace(); }
  // The global decay/contraction structure needs tr B >= 0.
  bool trace_ok(double tol = 1e-12) const { return B.trace() >= -tol; }

  // Throws InvalidInput / NotPsd on malformed data. psd_tol is the relative
  // eigenvalue tolerance applied to Q.
  void validate(double psd_tol = 1e-10) const;
};

// Volume of the unit ball in R^n.
double omega_n(int n);

// Normalizing constant of the kernel: c_N = omega_N (4 pi)^{-N/2}.
double kernel_constant(int n);

// Constant in the squared-kernel mass identity:
// a_N = c_N^2 omega_N^{-1} (2 pi)^{N/2}.
double kernel_square_constant(int n);

// Everything time-dependent the kernel needs at one fixed t:
// E = e^{tB}, the Gramian W(t) = integral_0^t e^{sB} Q e^{sB^T} ds = t K(t),
// its PSD square root scaled for sampling, and the volume function
// V(t) = omega_N det(t K(t))^{1/2}.
struct CovarianceBundle {
  double t = 0.0;
  Matrix exp_tB;
  Matrix gram;       // t K(t)
  Matrix K;          // gram / t
  Matrix sqrt_cov;   // sqrt(2 gram): forward samples are E X + sqrt_cov Z
  double log_det_gram = 0.0;
  double volume = 0.0;
  double min_eig_K = 0.0;

  // <K^{-1} d, d> for d = Y - e^{tB} X, i.e. the squared pseudo-distance.
  double quad_form(const Vector& d) const;

  Eigen::LLT<Matrix> K_chol;
};

// Computes the bundle by one block matrix exponential of [[B, Q], [0, -B^T]]
// read off as W = M12 M11^T, extended to large t by Gramian doubling
// W(2t) = W + E W E^T. Throws HypoellipticityViolation when the averaged
// covariance K(t) loses strict positivity (absolute eigenvalue floor 1e-12).
CovarianceBundle covariance(const OperatorSpec& spec, double t);

// Slow reference route for the same Gramian: adaptive Simpson applied to the
// defining integrand. Used to cross-check the block-exponential identity.
Matrix gramian_by_quadrature(const OperatorSpec& spec, double t,
                             double rel_tol = 1e-10);

double volume(const OperatorSpec& spec, double t);
double log_volume(const OperatorSpec& spec, double t);

// Anisotropic pseudo-distance m_t(X,Y) = <K(t)^{-1}(Y - e^{tB}X), .>^{1/2}.
double pseudo_distance(const OperatorSpec& spec, const Vector& X,
                       const Vector& Y, double t);
double pseudo_distance(const CovarianceBundle& cb, const Vector& X, const Vector& Y);

// Transition density p(X,Y,t) = c_N / V(t) * exp(-m_t(X,Y)^2 / 4t).
double kernel_density(const OperatorSpec& spec, const Vector& X,
                      const Vector& Y, double t);
double kernel_density(const CovarianceBundle& cb, int dim, const Vector& X,
                      const Vector& Y);

struct HypoellipticityReport {
  bool ok = false;
  double min_eig = 0.0;   // worst min eigenvalue of K(t) over the grid
  double argmin_t = 0.0;
  std::vector<double> grid;
  std::vector<double> min_eigs;  // NaN where the exponential overflowed
  std::vector<std::string> warnings;
};

// Checks K(t) > 0 on a log grid (default 32 points spanning [1e-4, 1e4]).
HypoellipticityReport check_hypoelliptic(const OperatorSpec& spec,
                                         double t_lo = 1e-4, double t_hi = 1e4,
                                         int count = 32);

struct DimensionReport {
  double D0 = 0.0;       // 2 x log-log slope of V on [1e-4, 1e-2]
  double Dinf = 0.0;     // same on [1e2, 1e4]; +inf for exponential growth
  double residual0 = 0.0;
  double residual_inf = 0.0;
  bool power_law0 = false;
  bool power_law_inf = false;
  std::string regime;    // homogeneous | crossing | expanding
  std::vector<std::string> warnings;
};

DimensionReport intrinsic_dimensions(const OperatorSpec& spec);

// Named examples. laplace(N): Q=I, B=0. kolmogorov(n): dim 2n kinetic chain,
// Q = diag(I_n, 0), drift v -> x. kramers(): dim 2 rotation drift.
// ornstein_uhlenbeck(N): Q=I, B=-I (trace condition fails on purpose).
OperatorSpec catalog(const std::string& name, int param = 0);

// Fitted lower-bound constant gamma with V(t) >= gamma * t^{D/2} over a log
// t-grid; the workhorse behind the isoperimetric-style bounds.
double volume_growth_constant(const OperatorSpec& spec, double D,
                              double t_lo = 1e-4, double t_hi = 1e4,
                              int count = 64);

// Two-regime variant: V(t) >= gamma * min(t^{D0/2}, t^{Dinf/2}).
double volume_growth_constant2(const OperatorSpec& spec, double D0,
                               double Dinf, double t_lo = 1e-4,
                               double t_hi = 1e4, int count = 64);

}  // namespace kfp
