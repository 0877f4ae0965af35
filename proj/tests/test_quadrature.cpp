#include <doctest.h>

#include <cmath>

#include "kfp/errors.hpp"
#include "kfp/quadrature.hpp"

using namespace kfp;

TEST_CASE("adaptive simpson hits closed forms within its own estimate") {
  // Damped oscillation: int_0^20 cos(3x) e^{-x} dx.
  auto f = [](double x) { return std::cos(3.0 * x) * std::exp(-x); };
  double exact =
      0.1 * (1.0 - std::exp(-20.0) * (std::cos(60.0) - 3.0 * std::sin(60.0)));
  QuadResult q = adaptive_simpson(f, 0.0, 20.0, 1e-11);
  CHECK(std::abs(q.value - exact) < 1e-10);
  CHECK(q.evals > 0);

  // Gaussian mass over a wide window.
  auto g = [](double x) { return std::exp(-0.5 * x * x); };
  QuadResult qg = adaptive_simpson(g, -10.0, 10.0, 1e-12);
  CHECK(qg.value == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-11));

  // Sharp peak far from the midpoint still gets found.
  auto peak = [](double x) { return std::exp(-1e4 * (x - 0.123) * (x - 0.123)); };
  QuadResult qp = adaptive_simpson(peak, 0.0, 1.0, 1e-12);
  CHECK(qp.value == doctest::Approx(std::sqrt(M_PI) / 100.0).epsilon(1e-8));
}

TEST_CASE("matrix simpson integrates entrywise") {
  auto f = [](double t) {
    Eigen::MatrixXd m(2, 2);
    m << std::sin(t), t, t * t, std::exp(t);
    return m;
  };
  Eigen::MatrixXd v = adaptive_simpson_matrix(f, 0.0, 1.0, 1e-12);
  CHECK(v(0, 0) == doctest::Approx(1.0 - std::cos(1.0)).epsilon(1e-11));
  CHECK(v(0, 1) == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(v(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-11));
  CHECK(v(1, 1) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
}

TEST_CASE("gauss-legendre is exact to degree 2n-1") {
  for (int n : {3, 8, 20, 64}) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    REQUIRE(static_cast<int>(x.size()) == n);

    double wsum = 0.0;
    for (double wi : w) wsum += wi;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));

    // int_{-1}^1 x^k dx = 2/(k+1) for even k, 0 for odd; exact through
    // k = 2n-1.
    int k = 2 * n - 2;
    double sum = 0.0, sum_odd = 0.0;
    for (int i = 0; i < n; ++i) {
      sum += w[i] * std::pow(x[i], k);
      sum_odd += w[i] * std::pow(x[i], k + 1);
    }
    CHECK(sum == doctest::Approx(2.0 / (k + 1)).epsilon(1e-12));
    CHECK(std::abs(sum_odd) < 1e-12);
  }
  std::vector<double> x, w;
  CHECK_THROWS_AS(gauss_legendre(65, x, w), InvalidInput);
  CHECK_THROWS_AS(gauss_legendre(0, x, w), InvalidInput);
}

TEST_CASE("panel grids integrate power laws") {
  Grid g = gl_panels(0.0, 2.0, 4, 6);
  CHECK(g.apply([](double x) { return x * x * x; }) ==
        doctest::Approx(4.0).epsilon(1e-13));

  // Log panels absorb the Jacobian: int_a^b t^{-0.7} dt over 12 decades.
  Grid lg = gl_log_panels(1e-6, 1e6, 24, 12);
  double exact = (std::pow(1e6, 0.3) - std::pow(1e-6, 0.3)) / 0.3;
  CHECK(lg.apply([](double t) { return std::pow(t, -0.7); }) ==
        doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("log spacing and line fits") {
  std::vector<double> pts = log_space(1e-3, 1e3, 7);
  REQUIRE(pts.size() == 7);
  CHECK(pts.front() == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(pts.back() == doctest::Approx(1e3).epsilon(1e-12));
  for (size_t i = 1; i < pts.size(); ++i)
    CHECK(pts[i] / pts[i - 1] == doctest::Approx(10.0).epsilon(1e-10));

  std::vector<double> xs = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> ys = {-2.0, 1.0, 4.0, 7.0};
  LineFit lf = fit_line(xs, ys);
  CHECK(lf.slope == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(lf.intercept == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(lf.residual < 1e-12);

  ys[2] = 4.5;  // bend the data, residual must notice
  CHECK(fit_line(xs, ys).residual > 0.1);
}
