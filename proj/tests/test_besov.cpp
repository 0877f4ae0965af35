#include <doctest.h>

#include <cmath>

#include "kfp/besov.hpp"
#include "kfp/semigroup.hpp"
#include "oracles.hpp"

using namespace kfp;

namespace {
Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}
}  // namespace

TEST_CASE("heat-content curve matches the dense quadrature reference") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::bump(vec1(0.0), 1.0, 1.0, 2);
  std::vector<double> ts = {0.01, 0.2, 1.0, 5.0};
  auto curve = besov_curve(spec, f, ts, 200000, 0xB5EED);
  REQUIRE(curve.size() == ts.size());
  for (size_t k = 0; k < ts.size(); ++k) {
    double exact = oracle::bump_G(ts[k]);
    CHECK(std::abs(curve[k].value - exact) <
          4.0 * curve[k].std_error + 2e-3);
    CHECK(curve[k].std_error > 0.0);
  }
  // Saturation: G -> 2 ||f||_1 = 32/15 once the kernel outruns the support.
  auto sat = besov_curve(spec, f, {1e4}, 200000, 0xB5EED);
  CHECK(std::abs(sat[0].value - 32.0 / 15.0) < 4.0 * sat[0].std_error + 1e-3);
}

TEST_CASE("seminorm integral agrees with the reference curve end to end") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::bump(vec1(0.0), 1.0, 1.0, 2);
  double alpha = 0.6;

  // Reference: int t^{-1-alpha/2} G(t) dt assembled from the dense-quadrature
  // curve, a sqrt(t) extrapolation below t0 (flat-boundary rate), and a
  // bracketed saturation tail above T.
  double t0 = 1e-6, T = 1e3, l1 = 16.0 / 15.0;
  double mid = oracle::integrate(
      [&](double u) {
        double t = std::exp(u);
        return std::pow(t, -0.5 * alpha) * oracle::bump_G(t);
      },
      std::log(t0), std::log(T), 3e-6);
  double C = oracle::bump_G(t0) / std::sqrt(t0);
  double below = C * std::pow(t0, 0.5 - 0.5 * alpha) / (0.5 - 0.5 * alpha);
  double below_bias = 0.15 * below;  // O(sqrt(t0)) relative fit bias, generous
  double tail_lo = oracle::bump_G(T) * (2.0 / alpha) * std::pow(T, -0.5 * alpha);
  double tail_hi = 2.0 * l1 * (2.0 / alpha) * std::pow(T, -0.5 * alpha);
  double ref = mid + below + 0.5 * (tail_lo + tail_hi);
  double ref_err = below_bias + 0.5 * (tail_hi - tail_lo) + 1e-5;

  BesovReport rep = besov_seminorm_detail(spec, f, alpha, 1, 150000, 0xB5EED);
  CHECK(std::abs(rep.value - ref) <
        rep.quad_error + 4.0 * rep.mc_error + ref_err + 0.01 * ref);
  CHECK(std::abs(rep.beta - 0.5) < 0.1);
  CHECK_FALSE(rep.divergence_warning);

  // The wrapper folds both error channels into one bar.
  MCEstimate est = besov_seminorm(spec, f, alpha, 1, 20000, 0xB5EED);
  CHECK(est.value > 0.0);
  CHECK(est.std_error > 0.0);
}

TEST_CASE("seminorm rejects unsupported inputs") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::bump(vec1(0.0), 1.0, 1.0, 2);
  CHECK_THROWS_AS(besov_seminorm_detail(spec, f, 1.0, 1, 100, 1), InvalidInput);
  CHECK_THROWS_AS(besov_seminorm_detail(spec, f, 0.5, 2, 100, 1), InvalidInput);
  OperatorSpec ou = catalog("ornstein_uhlenbeck", 1);
  CHECK_THROWS_AS(besov_seminorm_detail(ou, f, 0.5, 1, 100, 1), InvalidInput);
}

TEST_CASE("level sets of quasi-concave profiles are exact regions") {
  Matrix S(2, 2);
  S << 0.8, 0.25, 0.25, 0.5;
  Vector mu(2);
  mu << 0.3, -0.2;
  ScalarField g = ScalarField::gaussian(mu, S, 1.3);
  LevelSetProfile prof(g);
  CHECK(prof.sigma_max() == doctest::Approx(1.3).epsilon(1e-12));

  double sigma = 0.5;
  double r2 = 2.0 * std::log(1.3 / sigma);
  double expect = M_PI * std::sqrt(S.determinant()) * r2;
  CHECK(prof.level_measure(sigma) == doctest::Approx(expect).epsilon(1e-12));
  RegionPtr E = prof.level_region(sigma);
  REQUIRE(E);
  CHECK(E->measure() == doctest::Approx(expect).epsilon(1e-12));

  // Membership coincides with the superlevel condition.
  GaussianMixture q = GaussianMixture::covering({&g});
  for (int i = 0; i < 3000; ++i) {
    RandomStream rs(0xB5EED, 5, i);
    Vector X = q.sample(rs);
    CHECK(E->contains(X) == (g(X) > sigma));
  }
  CHECK(prof.level_region(1.31) == nullptr);
  CHECK(prof.level_measure(1.31) == 0.0);

  // Bump profile: radius R sqrt(1 - (sigma/amp)^{1/k}).
  ScalarField b = ScalarField::bump(Vector::Zero(2), 1.5, 2.0, 2);
  LevelSetProfile bp(b);
  double rad = 1.5 * std::sqrt(1.0 - std::sqrt(0.5 / 2.0));
  CHECK(bp.level_measure(0.5) == doctest::Approx(M_PI * rad * rad).epsilon(1e-12));
  RegionPtr BE = bp.level_region(0.5);
  for (int i = 0; i < 3000; ++i) {
    RandomStream rs(0xB5EED, 6, i);
    Vector X = Vector::Zero(2);
    X(0) = -2.0 + 4.0 * rs.u01();
    X(1) = -2.0 + 4.0 * rs.u01();
    CHECK(BE->contains(X) == (b(X) > 0.5));
  }
}

TEST_CASE("layer-cake inequality is exact for one step and strict for two") {
  double D = 2.0, s = 0.25;
  LayerCakeReport one = layercake_check({0.0, 2.0}, {1.5}, D, s);
  CHECK(one.ok);
  CHECK(one.lhs == doctest::Approx(one.rhs).epsilon(1e-12));

  LayerCakeReport two = layercake_check({0.0, 1.0, 3.0}, {2.0, 0.5}, D, s);
  CHECK(two.ok);
  CHECK(two.lhs < two.rhs);

  CHECK_THROWS_AS(layercake_check({0.0, 1.0, 2.0}, {1.0, 2.0}, D, s),
                  InvalidInput);  // increasing step
  CHECK_THROWS_AS(layercake_check({0.0, 1.0}, {1.0}, 0.4, s), InvalidInput);
  CHECK_THROWS_AS(layercake_check({1.0, 0.5}, {1.0}, D, s), InvalidInput);
}

TEST_CASE("single-regime embedding holds for a smooth profile") {
  OperatorSpec spec = catalog("laplace", 2);
  ScalarField g = ScalarField::gaussian_isotropic(Vector::Zero(2), 0.8, 1.2);
  LevelSetProfile prof(g);
  SobolevReport rep = sobolev_ratio(spec, prof, 0.25, 30000, 0xB5EED);
  CHECK(rep.regime == "single");
  CHECK(rep.q0 == doctest::Approx(2.0 / 1.5).epsilon(1e-9));
  CHECK(rep.qinf == doctest::Approx(rep.q0).epsilon(1e-12));
  CHECK(rep.i_s > 0.0);
  CHECK(rep.ok);
  CHECK(rep.lhs <= rep.rhs * (1.0 + 5.0 * (rep.lhs_err / rep.lhs +
                                           rep.rhs_err / rep.rhs) +
                              1e-12));
}
