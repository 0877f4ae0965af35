#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "kfp/errors.hpp"

namespace kfp {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // internal estimate, absolute
  long evals = 0;
};

// Classic recursive Simpson with Richardson acceleration. abs_tol is the
// total absolute error budget for [a,b].
QuadResult adaptive_simpson(const std::function<double(double)>& f, double a,
                            double b, double abs_tol, int max_depth = 50);

// Matrix-valued variant; the refinement decision uses the Frobenius norm, so
// one recursion tree serves all entries.
Eigen::MatrixXd adaptive_simpson_matrix(
    const std::function<Eigen::MatrixXd(double)>& f, double a, double b,
    double abs_tol, int max_depth = 40);

// Gauss-Legendre nodes/weights on [-1,1], order n <= 64.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// A quadrature grid: sum_i w[i] * f(x[i]) approximates an integral in x.
struct Grid {
  std::vector<double> x, w;
  double apply(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
    return s;
  }
};

// Composite Gauss-Legendre over [a,b] split into equal panels.
Grid gl_panels(double a, double b, int panels, int order);

// Gauss-Legendre in u = log t over [log a, log b]; returned nodes are t
// values and the weights absorb the dt = t du Jacobian. Integrals of
// f(t) dt over [a,b] with power-law behaviour resolve with few panels.
Grid gl_log_panels(double a, double b, int panels, int order);

// Log-spaced sample points (no weights), inclusive of both ends.
std::vector<double> log_space(double a, double b, int count);

// Least-squares slope/intercept of y against x; residual is the max
// absolute deviation of the fit.
struct LineFit {
  double slope = 0.0, intercept = 0.0, residual = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kfp
