#pragma once

// Reference values for the tests, computed with self-contained numerics
// (local Simpson recursion, erfc/Gamma closed forms). Nothing here calls the
// library quadrature, sampling, or kernel code paths under test.

#include <cmath>
#include <functional>

namespace oracle {

// Plain recursive Simpson; enough for the smooth or piecewise-smooth
// integrands below.
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 44);
}

// ---------------------------------------------------------------------------
// 1D heat semigroup P_t = e^{t d^2/dx^2}, kernel N(x, 2t).

// || P_t 1_(0,1) - 1_(0,1) ||_1 = 2 erfc(U) + 4 sqrt(t/pi) (1 - e^{-U^2}),
// U = 1/(2 sqrt t). Derived from the Gaussian CDF antiderivative
// int Phi = x Phi + phi.
inline double interval_deficit(double t) {
  double U = 0.5 / std::sqrt(t);
  return 2.0 * std::erfc(U) +
         4.0 * std::sqrt(t / M_PI) * (1.0 - std::exp(-U * U));
}

// P_t applied to amp * exp(-(x-mu)^2 / (2 sig2)): variances add, mass is
// conserved.
inline double heat_gaussian(double mu, double sig2, double amp, double x,
                            double t) {
  double v = sig2 + 2.0 * t;
  double d = x - mu;
  return amp * std::sqrt(sig2 / v) * std::exp(-0.5 * d * d / v);
}

// (-d^2/dx^2)^s of exp(-x^2/2) through the Fourier multiplier |xi|^{2s}:
// sqrt(2/pi) int_0^inf xi^{2s} e^{-xi^2/2} cos(x xi) d xi.
inline double frac_gaussian(double x, double s) {
  auto f = [=](double xi) {
    return std::pow(xi, 2.0 * s) * std::exp(-0.5 * xi * xi) *
           std::cos(x * xi);
  };
  return std::sqrt(2.0 / M_PI) * integrate(f, 0.0, 14.0, 1e-12);
}

// Fractional perimeter of (0, L): s/Gamma(1-s) int t^{-1-s} d_L(t) dt with
// d_L(t) = L d_1(t / L^2). Quadrature in log t on [1e-8, 1e8]; below the cut
// d ~ 4 sqrt(t/pi) up to e^{-1/(4t)} corrections, past it
// d = 2L - 2L^2 (4 pi t)^{-1/2} + O(t^{-3/2}), both integrated exactly.
inline double interval_per(double L, double s) {
  double t0 = 1e-8, T = 1e8;
  auto d = [=](double t) { return L * interval_deficit(t / (L * L)); };
  auto g = [=](double u) {
    double t = std::exp(u);
    return std::pow(t, -s) * d(t);  // t^{-1-s} d(t) dt = t^{-s} d(t) du
  };
  double mid = integrate(g, std::log(t0), std::log(T), 1e-13);
  double below = 4.0 / std::sqrt(M_PI) * std::pow(t0, 0.5 - s) / (0.5 - s);
  double above = 2.0 * L * std::pow(T, -s) / s -
                 2.0 * L * L / std::sqrt(4.0 * M_PI) *
                     std::pow(T, -0.5 - s) / (0.5 + s);
  return s / std::tgamma(1.0 - s) * (mid + below + above);
}

// Newtonian potential of the ball indicator at its center:
// (-Laplace)^{-1} 1_{B_R}(0) = int_{B_R} |y|^{-1}/(4 pi) dy = R^2/2.
inline double newtonian_ball_center(double R) { return 0.5 * R * R; }

// ---------------------------------------------------------------------------
// Heat-content curve G(t) = int E[|f(Y) - f(X)|] - E[|f(Y)|] dX + ||f||_1
// for the quartic bump f(x) = (1 - x^2)^2 on [-1,1] under the 1D heat
// semigroup. The bracket vanishes exactly where f(x) = 0, outside the
// support p places mass (1 - Pin) with integrand value f(x), and the inner
// [-1,1] piece is integrated between the kinks of |f(y) - f(x)| at y = +-x.
inline double bump_G(double t) {
  auto f = [](double x) {
    double w = 1.0 - x * x;
    return w > 0.0 ? w * w : 0.0;
  };
  double sd = std::sqrt(2.0 * t);
  auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  double l1 = 16.0 / 15.0;

  auto outer = [&](double x) {
    double fx = f(x);
    auto inner = [&](double y) {
      double p = std::exp(-0.5 * (y - x) * (y - x) / (sd * sd)) /
                 (sd * std::sqrt(2.0 * M_PI));
      return p * (std::abs(f(y) - fx) - f(y));
    };
    double ax = std::abs(x);
    double v = 0.0;
    if (ax > 1e-12) {
      v += integrate(inner, -1.0, -ax, 1e-11);
      v += integrate(inner, -ax, ax, 1e-11);
      v += integrate(inner, ax, 1.0, 1e-11);
    } else {
      v += integrate(inner, -1.0, 1.0, 1e-11);
    }
    double pin = Phi((1.0 - x) / sd) - Phi((-1.0 - x) / sd);
    return v + fx * (1.0 - pin);
  };
  return integrate(outer, -1.0, 1.0, 1e-9) + l1;
}

}  // namespace oracle
