#include <doctest.h>

#include <cmath>

#include "kfp/fractional.hpp"
#include "kfp/rng.hpp"
#include "oracles.hpp"

using namespace kfp;

namespace {
Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}
}  // namespace

TEST_CASE("difference kernel: spot values and L1 identity") {
  // l_s(sigma; t, tau) = [(sigma-t)_+^{s-1} - (sigma-tau)_+^{s-1}] / Gamma(s).
  double g = std::tgamma(0.5);
  CHECK(ell_kernel(1.5, 1.0, 2.0, 0.5) ==
        doctest::Approx(std::pow(0.5, -0.5) / g).epsilon(1e-13));
  CHECK(ell_kernel(3.0, 1.0, 2.0, 0.5) ==
        doctest::Approx((std::pow(2.0, -0.5) - 1.0) / g).epsilon(1e-13));
  CHECK(ell_kernel(0.5, 1.0, 2.0, 0.5) == 0.0);  // before both singularities

  // int |l_s| dsigma = 2 |t-tau|^s / Gamma(1+s) across scales and orders.
  RandomStream rs(0xB5EED, 1, 0);
  for (int i = 0; i < 40; ++i) {
    double t = std::pow(10.0, -4.0 + 7.0 * rs.u01());
    double tau = std::pow(10.0, -4.0 + 7.0 * rs.u01());
    double s = 0.05 + 0.9 * rs.u01();
    double closed = ell_l1_closed(t, tau, s);
    CHECK(ell_l1(t, tau, s) == doctest::Approx(closed).epsilon(1e-8));
  }
  CHECK(ell_l1(2.0, 2.0, 0.5) == 0.0);
}

TEST_CASE("fractional power of a gaussian matches the multiplier quadrature") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.0), 1.0, 1.0);
  FracQuadSpec q;
  for (double s : {0.25, 0.5}) {
    double x = 0.3;  // safely away from the result's zero crossing
    FracResult r = balakrishnan_apply(spec, f, vec1(x), s, q, 30000, 0xB5EED);
    double exact = oracle::frac_gaussian(x, s);
    CHECK(std::abs(r.value - exact) <
          4.0 * r.std_error + r.quad_error + 0.01 * std::abs(exact));
    CHECK(r.tail_bound <= q.tail_budget * 1.0001);
  }
}

TEST_CASE("riesz potential of the unit ball is Newtonian at the center") {
  OperatorSpec spec = catalog("laplace", 3);
  ScalarField f = ScalarField::indicator(make_ball(Vector::Zero(3), 1.0));
  FracQuadSpec q;
  FracResult r = riesz_apply(spec, f, Vector::Zero(3), 2.0, q, 100000, 0xB5EED);
  double exact = oracle::newtonian_ball_center(1.0);
  CHECK(std::abs(r.value - exact) <
        4.0 * r.std_error + r.quad_error + 0.01 * exact);
}

TEST_CASE("order and convergence guards") {
  OperatorSpec lap2 = catalog("laplace", 2);
  ScalarField f = ScalarField::gaussian_isotropic(Vector::Zero(2), 1.0, 1.0);
  FracQuadSpec q;
  CHECK_THROWS_AS(balakrishnan_apply(lap2, f, Vector::Zero(2), 1.2, q, 100, 1),
                  InvalidInput);
  CHECK_THROWS_AS(balakrishnan_apply(lap2, f, Vector::Zero(2), 0.0, q, 100, 1),
                  InvalidInput);
  // alpha = Dinf: the far-time integral cannot converge.
  CHECK_THROWS_AS(riesz_apply(lap2, f, Vector::Zero(2), 2.0, q, 100, 1),
                  DivergentPotential);
}

TEST_CASE("difference bound holds with non-increasing norms") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.0), 0.8, 1.0);
  FracQuadSpec q;
  LedouxReport rep = ledoux_check(spec, f, 1, 0.5, 0.3, 0.5,
                                  {0.05, 0.15, 0.4}, q, 10000, 0xB5EED);
  CHECK(rep.ok);
  CHECK(rep.monotone);
  CHECK(rep.kernel_l1 ==
        doctest::Approx(ell_l1_closed(0.5, 0.3, 0.5)).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(rep.kernel_l1 * rep.sup_norm).epsilon(1e-12));
}

TEST_CASE("volume tail certificates bracket the closed form") {
  // Exact tail for V(t) = omega_3 t^{3/2}:
  // c_3 mass / omega_3 * T^{p - 3/2} / (3/2 - p).
  OperatorSpec spec = catalog("laplace", 3);
  double mass = 2.0, p = 0.25, T = 10.0;
  double exact = kernel_constant(3) * mass / omega_n(3) *
                 std::pow(T, p - 1.5) / (1.5 - p);
  double bound = volume_power_tail(spec, mass, p, T);
  CHECK(bound >= exact * (1.0 - 1e-9));
  CHECK(bound <= exact * 2.5);  // slope safety margin only costs a factor

  // Power at the growth rate: no convergence certificate exists.
  CHECK(std::isinf(volume_power_tail(spec, mass, 1.6, T)));
}

TEST_CASE("generator L1 estimate tracks |f''| for the heat case") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.0), 1.0, 1.0);
  double exact = oracle::integrate(
      [](double x) {
        return std::abs(x * x - 1.0) * std::exp(-0.5 * x * x);
      },
      -10.0, 10.0, 1e-10);
  double est = generator_l1_estimate(spec, f, 8192, 0xB5EED);
  CHECK(est == doctest::Approx(exact).epsilon(0.10));
}
