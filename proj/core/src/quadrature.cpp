#include "kfp/quadrature.hpp"

#include <cmath>
#include <limits>

namespace kfp {

namespace {

struct SimpsonRec {
  const std::function<double(double)>& f;
  long evals = 0;

  double run(double a, double fa, double m, double fm, double b, double fb,
             double whole, double tol, int depth, double& err) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    evals += 2;
    double h6 = (b - a) / 12.0;
    double left = h6 * (fa + 4.0 * flm + fm);
    double right = h6 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    // Subdividing below the rounding scale of the panel sums cannot improve
    // the estimate, so treat that as converged.
    double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                   (std::abs(left) + std::abs(right) + std::abs(whole));
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol ||
        std::abs(delta) <= floor) {
      err += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return run(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, err) +
           run(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, err);
  }
};

}  // namespace

QuadResult adaptive_simpson(const std::function<double(double)>& f, double a,
                            double b, double abs_tol, int max_depth) {
  if (!(b > a)) {
    if (b == a) return {0.0, 0.0, 0};
    throw InvalidInput("adaptive_simpson: b < a");
  }
  SimpsonRec rec{f};
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  rec.evals = 3;
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  QuadResult out;
  out.value = rec.run(a, fa, m, fm, b, fb, whole, abs_tol, max_depth, out.error);
  out.evals = rec.evals;
  return out;
}

Eigen::MatrixXd adaptive_simpson_matrix(
    const std::function<Eigen::MatrixXd(double)>& f, double a, double b,
    double abs_tol, int max_depth) {
  if (b == a) return Eigen::MatrixXd::Zero(1, 1);
  if (b < a) throw InvalidInput("adaptive_simpson_matrix: b < a");

  struct Rec {
    const std::function<Eigen::MatrixXd(double)>& f;
    Eigen::MatrixXd run(double a, const Eigen::MatrixXd& fa, double m,
                        const Eigen::MatrixXd& fm, double b,
                        const Eigen::MatrixXd& fb, const Eigen::MatrixXd& whole,
                        double tol, int depth) {
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      Eigen::MatrixXd flm = f(lm), frm = f(rm);
      double h6 = (b - a) / 12.0;
      Eigen::MatrixXd left = h6 * (fa + 4.0 * flm + fm);
      Eigen::MatrixXd right = h6 * (fm + 4.0 * frm + fb);
      Eigen::MatrixXd delta = left + right - whole;
      if (depth <= 0 || delta.norm() <= 15.0 * tol)
        return left + right + delta / 15.0;
      return run(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
             run(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
    }
  } rec{f};

  double m = 0.5 * (a + b);
  Eigen::MatrixXd fa = f(a), fm = f(m), fb = f(b);
  Eigen::MatrixXd whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec.run(a, fa, m, fm, b, fb, whole, abs_tol, max_depth);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1 || n > 64) throw InvalidInput("gauss_legendre: order outside [1,64]");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on P_n roots, seeded with the Chebyshev approximation.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

Grid gl_panels(double a, double b, int panels, int order) {
  if (!(b > a) || panels < 1) throw InvalidInput("gl_panels: bad range");
  std::vector<double> xn, wn;
  gauss_legendre(order, xn, wn);
  Grid g;
  g.x.reserve(static_cast<size_t>(panels) * order);
  g.w.reserve(static_cast<size_t>(panels) * order);
  double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h, mid = lo + 0.5 * h;
    for (int i = 0; i < order; ++i) {
      g.x.push_back(mid + 0.5 * h * xn[i]);
      g.w.push_back(0.5 * h * wn[i]);
    }
  }
  return g;
}

Grid gl_log_panels(double a, double b, int panels, int order) {
  if (!(a > 0.0) || !(b > a)) throw InvalidInput("gl_log_panels: need 0 < a < b");
  Grid u = gl_panels(std::log(a), std::log(b), panels, order);
  Grid g;
  g.x.resize(u.x.size());
  g.w.resize(u.w.size());
  for (size_t i = 0; i < u.x.size(); ++i) {
    g.x[i] = std::exp(u.x[i]);
    g.w[i] = u.w[i] * g.x[i];
  }
  return g;
}

std::vector<double> log_space(double a, double b, int count) {
  if (!(a > 0.0) || !(b > a) || count < 2) throw InvalidInput("log_space: bad range");
  std::vector<double> out(count);
  double la = std::log(a), step = (std::log(b) - la) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = std::exp(la + i * step);
  out.back() = b;
  return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_line: need >= 2 points");
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidInput("fit_line: degenerate abscissae");
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  for (size_t i = 0; i < x.size(); ++i)
    f.residual = std::max(f.residual, std::abs(y[i] - (f.intercept + f.slope * x[i])));
  return f;
}

}  // namespace kfp
