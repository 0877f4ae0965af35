#include "kfp/operator_model.hpp"

#include <cmath>
#include <limits>

#include "kfp/quadrature.hpp"

namespace kfp {

void OperatorSpec::validate(double psd_tol) const {
  if (dim < kMinDim || dim > kMaxDim)
    throw InvalidInput("operator: dimension " + std::to_string(dim) +
                       " outside [" + std::to_string(kMinDim) + "," +
                       std::to_string(kMaxDim) + "]");
  if (Q.rows() != dim || Q.cols() != dim || B.rows() != dim || B.cols() != dim)
    throw InvalidInput("operator: Q/B shape does not match dim");
  if (!Q.allFinite() || !B.allFinite())
    throw InvalidInput("operator: non-finite entries");
  if (!is_symmetric(Q, psd_tol))
    throw InvalidInput("operator: Q is not symmetric");
  if (!is_psd(Q, psd_tol))
    throw NotPsd("operator: Q has an eigenvalue below the PSD tolerance");
}

double omega_n(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double kernel_constant(int n) {
  return omega_n(n) * std::pow(4.0 * M_PI, -0.5 * n);
}

double kernel_square_constant(int n) {
  double cn = kernel_constant(n);
  return cn * cn / omega_n(n) * std::pow(2.0 * M_PI, 0.5 * n);
}

namespace {

// One Van Loan step: exponentiate [[B, Q], [0, -B^T]] once; the top-right
// block times e^{tB}^T is the Gramian.
void van_loan(const OperatorSpec& spec, double t, Matrix& E, Matrix& W) {
  int n = spec.dim;
  Matrix H = Matrix::Zero(2 * n, 2 * n);
  H.topLeftCorner(n, n) = spec.B;
  H.topRightCorner(n, n) = spec.Q;
  H.bottomRightCorner(n, n) = -spec.B.transpose();
  Matrix M = mat_exp(H, t);
  E = M.topLeftCorner(n, n);
  W = M.topRightCorner(n, n) * E.transpose();
  W = 0.5 * (W + W.transpose());
}

// Gramian over [0, t] for arbitrary t: direct Van Loan up to t = 1, then
// doubling W(2t) = W(t) + E(t) W(t) E(t)^T, which stays finite whenever the
// Gramian itself does (the naive block exponential overflows for stable B).
void gramian(const OperatorSpec& spec, double t, Matrix& E, Matrix& W) {
  if (t <= 1.0) {
    van_loan(spec, t, E, W);
    return;
  }
  int k = static_cast<int>(std::ceil(std::log2(t)));
  double t0 = t / std::pow(2.0, k);
  van_loan(spec, t0, E, W);
  for (int i = 0; i < k; ++i) {
    W = W + E * W * E.transpose();
    W = 0.5 * (W + W.transpose());
    E = E * E;
    if (!W.allFinite() || !E.allFinite())
      throw InvalidInput("covariance: overflow accumulating the Gramian at t=" +
                         std::to_string(t));
  }
}

}  // namespace

double CovarianceBundle::quad_form(const Vector& d) const {
  return d.dot(K_chol.solve(d));
}

CovarianceBundle covariance(const OperatorSpec& spec, double t) {
  spec.validate();
  if (!(t > 0.0) || !std::isfinite(t))
    throw InvalidInput("covariance: time must be positive and finite");

  CovarianceBundle cb;
  cb.t = t;
  gramian(spec, t, cb.exp_tB, cb.gram);
  cb.K = cb.gram / t;

  SymSpectrum sp = sym_spectrum(cb.K);
  cb.min_eig_K = sp.min_eig;
  if (!(cb.min_eig_K > 1e-12))
    throw HypoellipticityViolation(
        "covariance: averaged covariance K(t) not positive at t=" +
        std::to_string(t) + " (min eig " + std::to_string(cb.min_eig_K) + ")");

  cb.log_det_gram = 0.0;
  for (int i = 0; i < sp.eigenvalues.size(); ++i)
    cb.log_det_gram += std::log(sp.eigenvalues[i] * t);
  double lv = std::log(omega_n(spec.dim)) + 0.5 * cb.log_det_gram;
  cb.volume = lv < 700.0 ? std::exp(lv) : std::numeric_limits<double>::infinity();

  cb.sqrt_cov = psd_sqrt(2.0 * cb.gram);
  cb.K_chol = Eigen::LLT<Matrix>(cb.K);
  if (cb.K_chol.info() != Eigen::Success)
    throw HypoellipticityViolation("covariance: Cholesky of K(t) failed at t=" +
                                   std::to_string(t));
  return cb;
}

Matrix gramian_by_quadrature(const OperatorSpec& spec, double t, double rel_tol) {
  spec.validate();
  if (!(t > 0.0)) throw InvalidInput("gramian_by_quadrature: t must be positive");
  auto integrand = [&](double s) -> Matrix {
    Matrix E = mat_exp(spec.B, s);
    return E * spec.Q * E.transpose();
  };
  // Scale the absolute budget off a crude trapezoid estimate.
  double scale = std::max(integrand(0.0).norm(), integrand(t).norm()) * t;
  if (scale == 0.0) scale = 1.0;
  return adaptive_simpson_matrix(integrand, 0.0, t, rel_tol * scale);
}

double volume(const OperatorSpec& spec, double t) { return covariance(spec, t).volume; }

double log_volume(const OperatorSpec& spec, double t) {
  CovarianceBundle cb = covariance(spec, t);
  return std::log(omega_n(spec.dim)) + 0.5 * cb.log_det_gram;
}

double pseudo_distance(const CovarianceBundle& cb, const Vector& X, const Vector& Y) {
  Vector d = Y - cb.exp_tB * X;
  return std::sqrt(std::max(0.0, cb.quad_form(d)));
}

double pseudo_distance(const OperatorSpec& spec, const Vector& X, const Vector& Y,
                       double t) {
  return pseudo_distance(covariance(spec, t), X, Y);
}

double kernel_density(const CovarianceBundle& cb, int dim, const Vector& X,
                      const Vector& Y) {
  Vector d = Y - cb.exp_tB * X;
  double m2 = cb.quad_form(d);
  return kernel_constant(dim) / cb.volume * std::exp(-0.25 * m2 / cb.t);
}

double kernel_density(const OperatorSpec& spec, const Vector& X, const Vector& Y,
                      double t) {
  if (X.size() != spec.dim || Y.size() != spec.dim)
    throw InvalidInput("kernel_density: point dimension mismatch");
  return kernel_density(covariance(spec, t), spec.dim, X, Y);
}

HypoellipticityReport check_hypoelliptic(const OperatorSpec& spec, double t_lo,
                                         double t_hi, int count) {
  spec.validate();
  HypoellipticityReport rep;
  rep.grid = log_space(t_lo, t_hi, count);
  rep.min_eig = std::numeric_limits<double>::infinity();
  bool any = false;
  for (double t : rep.grid) {
    double me = std::numeric_limits<double>::quiet_NaN();
    try {
      Matrix E, W;
      gramian(spec, t, E, W);
      me = sym_spectrum(W / t).min_eig;
    } catch (const Error&) {
      rep.warnings.push_back("covariance overflow at t=" + std::to_string(t));
    }
    rep.min_eigs.push_back(me);
    if (std::isfinite(me)) {
      any = true;
      if (me < rep.min_eig) {
        rep.min_eig = me;
        rep.argmin_t = t;
      }
    }
  }
  rep.ok = any && rep.min_eig > 1e-12 && rep.warnings.empty();
  return rep;
}

namespace {

LineFit volume_slope(const OperatorSpec& spec, double lo, double hi, int count) {
  std::vector<double> lx, ly;
  for (double t : log_space(lo, hi, count)) {
    Matrix E, W;
    gramian(spec, t, E, W);
    SymSpectrum sp = sym_spectrum(W);
    if (sp.min_eig <= 0.0)
      throw HypoellipticityViolation("intrinsic_dimensions: K(t) degenerate at t=" +
                                     std::to_string(t));
    lx.push_back(std::log(t));
    ly.push_back(std::log(omega_n(spec.dim)) +
                 0.5 * sp.eigenvalues.array().log().sum());
  }
  return fit_line(lx, ly);
}

}  // namespace

DimensionReport intrinsic_dimensions(const OperatorSpec& spec) {
  spec.validate();
  DimensionReport rep;

  LineFit f0 = volume_slope(spec, 1e-4, 1e-2, 17);
  rep.D0 = 2.0 * f0.slope;
  rep.residual0 = f0.residual;
  rep.power_law0 = f0.residual <= 0.05;
  if (!rep.power_law0)
    rep.warnings.push_back("volume is not a power law near t=0");

  bool exponential = false;
  try {
    LineFit fi = volume_slope(spec, 1e2, 1e4, 17);
    rep.Dinf = 2.0 * fi.slope;
    rep.residual_inf = fi.residual;
    rep.power_law_inf = fi.residual <= 0.05;
    if (!rep.power_law_inf) {
      // Distinguish super-polynomial growth from mere fit noise: compare
      // slopes over the two halves of the window.
      LineFit lo = volume_slope(spec, 1e2, 1e3, 9);
      LineFit hi = volume_slope(spec, 1e3, 1e4, 9);
      if (hi.slope > lo.slope + 0.5) exponential = true;
      rep.warnings.push_back("volume is not a power law near t=inf");
    }
  } catch (const Error&) {
    exponential = true;
    rep.warnings.push_back("volume overflow on the large-t window");
  }
  if (exponential) {
    rep.Dinf = std::numeric_limits<double>::infinity();
    rep.power_law_inf = false;
    rep.warnings.push_back("exponential volume growth: flagged, not fitted");
  }

  if (exponential)
    rep.regime = "expanding";
  else if (std::abs(rep.D0 - rep.Dinf) <= 0.1)
    rep.regime = "homogeneous";
  else if (rep.D0 > rep.Dinf + 0.1)
    rep.regime = "crossing";
  else
    rep.regime = "expanding";
  return rep;
}

OperatorSpec catalog(const std::string& name, int param) {
  OperatorSpec spec;
  if (name == "laplace") {
    int n = param > 0 ? param : 1;
    if (n < kMinDim || n > kMaxDim) throw InvalidInput("catalog: laplace dim out of range");
    spec.dim = n;
    spec.Q = Matrix::Identity(n, n);
    spec.B = Matrix::Zero(n, n);
    spec.name = "laplace(" + std::to_string(n) + ")";
  } else if (name == "kolmogorov") {
    int n = param > 0 ? param : 1;
    if (2 * n > kMaxDim) throw InvalidInput("catalog: kolmogorov block count out of range");
    int N = 2 * n;
    spec.dim = N;
    spec.Q = Matrix::Zero(N, N);
    spec.Q.topLeftCorner(n, n) = Matrix::Identity(n, n);
    spec.B = Matrix::Zero(N, N);
    spec.B.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
    spec.name = "kolmogorov(" + std::to_string(n) + ")";
  } else if (name == "kramers") {
    spec.dim = 2;
    spec.Q = Matrix::Zero(2, 2);
    spec.Q(0, 0) = 1.0;
    spec.B = Matrix::Zero(2, 2);
    spec.B(0, 1) = -1.0;
    spec.B(1, 0) = 1.0;
    spec.name = "kramers";
  } else if (name == "ornstein_uhlenbeck") {
    int n = param > 0 ? param : 1;
    if (n < kMinDim || n > kMaxDim)
      throw InvalidInput("catalog: ornstein_uhlenbeck dim out of range");
    spec.dim = n;
    spec.Q = Matrix::Identity(n, n);
    spec.B = -Matrix::Identity(n, n);
    spec.name = "ornstein_uhlenbeck(" + std::to_string(n) + ")";
  } else {
    throw NotFound("catalog: unknown operator '" + name + "'");
  }
  spec.validate();
  return spec;
}

double volume_growth_constant(const OperatorSpec& spec, double D, double t_lo,
                              double t_hi, int count) {
  double g = std::numeric_limits<double>::infinity();
  for (double t : log_space(t_lo, t_hi, count)) {
    double lv = log_volume(spec, t);
    g = std::min(g, std::exp(lv - 0.5 * D * std::log(t)));
  }
  if (!(g > 0.0) || !std::isfinite(g))
    throw InvalidInput("volume_growth_constant: degenerate fit");
  return g;
}

double volume_growth_constant2(const OperatorSpec& spec, double D0, double Dinf,
                               double t_lo, double t_hi, int count) {
  double g = std::numeric_limits<double>::infinity();
  for (double t : log_space(t_lo, t_hi, count)) {
    double lv = log_volume(spec, t);
    double lmin = std::min(0.5 * D0 * std::log(t), 0.5 * Dinf * std::log(t));
    g = std::min(g, std::exp(lv - lmin));
  }
  if (!(g > 0.0) || !std::isfinite(g))
    throw InvalidInput("volume_growth_constant2: degenerate fit");
  return g;
}

}  // namespace kfp
