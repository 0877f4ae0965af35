#include <doctest.h>

#include <cmath>

#include "kfp/operator_model.hpp"
#include "kfp/quadrature.hpp"

using namespace kfp;

namespace {
Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}
}  // namespace

TEST_CASE("kinetic-chain covariance at t=1 matches the closed form") {
  OperatorSpec spec = catalog("kolmogorov", 1);
  CovarianceBundle cb = covariance(spec, 1.0);
  Matrix K1(2, 2);
  K1 << 1.0, 0.5, 0.5, 1.0 / 3.0;
  CHECK((cb.K - K1).cwiseAbs().maxCoeff() < 1e-10);

  // exp(tB) = I + tB for the nilpotent drift.
  CHECK(cb.exp_tB(0, 0) == doctest::Approx(1.0));
  CHECK(cb.exp_tB(1, 0) == doctest::Approx(1.0));
  CHECK(cb.exp_tB(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("block-exponential gramian agrees with direct quadrature") {
  for (auto [name, param, t] : {std::tuple<const char*, int, double>{
                                    "kramers", 0, 0.7},
                                {"kolmogorov", 2, 3.0},
                                {"ornstein_uhlenbeck", 2, 1.3}}) {
    OperatorSpec spec = catalog(name, param);
    CovarianceBundle cb = covariance(spec, t);
    Matrix ref = gramian_by_quadrature(spec, t);
    CHECK((cb.gram - ref).norm() < 1e-8 * (1.0 + ref.norm()));
  }
}

TEST_CASE("gramian doubling reaches large times exactly") {
  // W(t) = [[t, t^2/2], [t^2/2, t^3/3]] for the kinetic chain at any t.
  OperatorSpec spec = catalog("kolmogorov", 1);
  double t = 1e6;
  CovarianceBundle cb = covariance(spec, t);
  CHECK(cb.gram(0, 0) == doctest::Approx(t).epsilon(1e-9));
  CHECK(cb.gram(0, 1) == doctest::Approx(t * t / 2.0).epsilon(1e-9));
  CHECK(cb.gram(1, 1) == doctest::Approx(t * t * t / 3.0).epsilon(1e-9));
}

TEST_CASE("volume laws follow the catalog closed forms") {
  OperatorSpec lap = catalog("laplace", 2);
  for (double t : {1e-3, 0.1, 1.0, 50.0})
    CHECK(volume(lap, t) == doctest::Approx(M_PI * t).epsilon(1e-12));

  OperatorSpec kol = catalog("kolmogorov", 1);
  for (double t : {0.01, 1.0, 100.0})
    CHECK(volume(kol, t) ==
          doctest::Approx(M_PI * t * t / std::sqrt(12.0)).epsilon(1e-10));

  OperatorSpec kra = catalog("kramers");
  for (double t : {0.3, 1.0, 7.0}) {
    double det = t * t / 4.0 + (std::cos(2.0 * t) - 1.0) / 8.0;
    CHECK(volume(kra, t) == doctest::Approx(M_PI * std::sqrt(det)).epsilon(1e-8));
  }

  CHECK(log_volume(lap, 1e3) == doctest::Approx(std::log(M_PI * 1e3)).epsilon(1e-12));
}

TEST_CASE("kernel density and pseudo-distance reduce to the heat kernel") {
  OperatorSpec lap = catalog("laplace", 2);
  Vector X = vec({0.0, 0.0}), Y = vec({1.0, 0.3});
  double t = 0.5;
  double r2 = 1.0 + 0.09;
  CHECK(pseudo_distance(lap, X, Y, t) ==
        doctest::Approx(std::sqrt(r2)).epsilon(1e-12));
  CHECK(kernel_density(lap, X, Y, t) ==
        doctest::Approx(std::exp(-r2 / (4.0 * t)) / (4.0 * M_PI * t))
            .epsilon(1e-12));

  // Forward mass: int p(X, y, t) dy = 1.
  OperatorSpec l1 = catalog("laplace", 1);
  double x0 = 0.3, tt = 0.8, w = 30.0 * std::sqrt(2.0 * tt);
  QuadResult mass = adaptive_simpson(
      [&](double y) {
        return kernel_density(l1, vec({x0}), vec({y}), tt);
      },
      x0 - w, x0 + w, 1e-11);
  CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-9));

  // Adjoint mass: int p(x, Y, t) dx = e^{-t tr B}; tr B = -1 for the
  // mean-reverting well, so the integral grows like e^t.
  OperatorSpec ou = catalog("ornstein_uhlenbeck", 1);
  double y0 = 0.4, to = 0.3;
  double ctr = std::exp(to) * y0, ww = 50.0;
  QuadResult amass = adaptive_simpson(
      [&](double x) {
        return kernel_density(ou, vec({x}), vec({y0}), to);
      },
      ctr - ww, ctr + ww, 1e-11);
  CHECK(amass.value == doctest::Approx(std::exp(to)).epsilon(1e-8));
}

TEST_CASE("intrinsic dimensions recover the known regimes") {
  DimensionReport lap = intrinsic_dimensions(catalog("laplace", 3));
  CHECK(lap.D0 == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(lap.Dinf == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(lap.regime == "homogeneous");
  CHECK(lap.power_law0);
  CHECK(lap.power_law_inf);

  DimensionReport kol = intrinsic_dimensions(catalog("kolmogorov", 1));
  CHECK(kol.D0 == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(kol.Dinf == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(kol.regime == "homogeneous");

  DimensionReport kra = intrinsic_dimensions(catalog("kramers"));
  CHECK(kra.D0 == doctest::Approx(4.0).epsilon(0.02));
  CHECK(kra.Dinf == doctest::Approx(2.0).epsilon(0.02));
  CHECK(kra.regime == "crossing");
}

TEST_CASE("hypoellipticity is checked dynamically, not just on Q") {
  // Degenerate diffusion with no drift coupling: Q is PSD so validate()
  // passes, but K(t) never becomes positive definite.
  OperatorSpec spec;
  spec.dim = 2;
  spec.Q = Matrix::Zero(2, 2);
  spec.Q(0, 0) = 1.0;
  spec.B = Matrix::Zero(2, 2);
  spec.name = "stuck";
  CHECK_NOTHROW(spec.validate());
  CHECK_THROWS_AS(covariance(spec, 1.0), HypoellipticityViolation);
  HypoellipticityReport hr = check_hypoelliptic(spec);
  CHECK_FALSE(hr.ok);

  HypoellipticityReport good = check_hypoelliptic(catalog("kolmogorov", 2));
  CHECK(good.ok);
  CHECK(good.min_eig > 0.0);
}

TEST_CASE("catalog, guards, and the trace condition") {
  CHECK(catalog("laplace", 0).dim == 1);  // default parameter
  CHECK(catalog("kolmogorov", 2).dim == 4);
  CHECK(catalog("kramers").trace_B() == 0.0);
  CHECK_THROWS_AS(catalog("heisenberg"), NotFound);
  CHECK_THROWS_AS(catalog("kolmogorov", 9), InvalidInput);  // dim 18 > cap

  OperatorSpec ou = catalog("ornstein_uhlenbeck", 3);
  CHECK(ou.trace_B() == doctest::Approx(-3.0));
  CHECK_FALSE(ou.trace_ok());
  CHECK(catalog("kolmogorov", 1).trace_ok());

  OperatorSpec bad;
  bad.dim = 2;
  bad.Q = Matrix::Identity(2, 2);
  bad.Q(0, 0) = -1.0;
  bad.B = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(bad.validate(), NotPsd);
  bad.Q = Matrix::Identity(3, 3);  // shape mismatch vs dim
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("ball-volume and kernel constants satisfy their identities") {
  CHECK(omega_n(1) == doctest::Approx(2.0));
  CHECK(omega_n(2) == doctest::Approx(M_PI));
  CHECK(omega_n(3) == doctest::Approx(4.0 * M_PI / 3.0));
  for (int n = 1; n <= 6; ++n) {
    double cn = kernel_constant(n);
    CHECK(cn == doctest::Approx(omega_n(n) * std::pow(4.0 * M_PI, -0.5 * n))
                    .epsilon(1e-14));
    CHECK(kernel_square_constant(n) ==
          doctest::Approx(cn * cn / omega_n(n) * std::pow(2.0 * M_PI, 0.5 * n))
              .epsilon(1e-14));
  }
}

TEST_CASE("volume growth constants are tight for exact power laws") {
  double g = volume_growth_constant(catalog("laplace", 2), 2.0);
  CHECK(g <= M_PI * (1.0 + 1e-9));
  CHECK(g >= M_PI * 0.9);

  double g2 = volume_growth_constant2(catalog("kramers"), 4.0, 2.0);
  CHECK(g2 > 0.0);
}
