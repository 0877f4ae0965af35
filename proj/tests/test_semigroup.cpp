#include <doctest.h>

#include <cmath>

#include "kfp/quadrature.hpp"
#include "kfp/semigroup.hpp"
#include "oracles.hpp"

using namespace kfp;

namespace {
Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}
Vector vec2(double x, double y) {
  Vector v(2);
  v(0) = x;
  v(1) = y;
  return v;
}
}  // namespace

TEST_CASE("sampled semigroup matches the 1D heat closed form") {
  OperatorSpec spec = catalog("laplace", 1);
  double mu = 0.3, sig = 0.7, amp = 1.2;
  ScalarField f = ScalarField::gaussian(vec1(mu), sig * sig * Matrix::Identity(1, 1), amp);
  Vector X = vec1(0.1);

  for (double t : {0.05, 0.4, 2.0}) {
    MCEstimate est = apply_semigroup(spec, f, X, t, 60000, 0xB5EED);
    double exact = oracle::heat_gaussian(mu, sig * sig, amp, X(0), t);
    CHECK(std::abs(est.value - exact) < 4.0 * est.std_error + 1e-9);
    CHECK(est.std_error > 0.0);
    CHECK(est.n == 60000);
  }

  // Exact propagation of the same field hits the oracle at full precision.
  CovarianceBundle cb = covariance(spec, 0.4);
  ScalarField pf = f.propagate(cb);
  CHECK(pf(X) ==
        doctest::Approx(oracle::heat_gaussian(mu, sig * sig, amp, X(0), 0.4))
            .epsilon(1e-12));
}

TEST_CASE("closed-form propagation composes like a semigroup") {
  OperatorSpec spec = catalog("kolmogorov", 1);
  Matrix S(2, 2);
  S << 0.8, 0.25, 0.25, 0.5;
  ScalarField f = ScalarField::gaussian(vec2(0.2, -0.1), S, 0.9);

  ScalarField two_step =
      f.propagate(covariance(spec, 0.3)).propagate(covariance(spec, 0.9));
  ScalarField one_step = f.propagate(covariance(spec, 1.2));
  for (auto [x, v] : {std::pair<double, double>{0.0, 0.0}, {1.0, -0.5}, {-0.7, 0.3}}) {
    Vector X = vec2(x, v);
    CHECK(two_step(X) == doctest::Approx(one_step(X)).epsilon(1e-9));
  }
}

TEST_CASE("curves share randomness across nodes and track the oracle") {
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.3), 0.7, 1.2);
  Vector X = vec1(0.1);
  std::vector<double> ts = {0.05, 0.2, 0.8};
  auto curve = semigroup_curve(spec, f, X, ts, 60000, 0xB5EED);
  REQUIRE(curve.size() == ts.size());
  for (size_t k = 0; k < ts.size(); ++k) {
    double exact = oracle::heat_gaussian(0.3, 0.49, 1.2, X(0), ts[k]);
    CHECK(std::abs(curve[k].value - exact) < 4.0 * curve[k].std_error + 1e-9);
  }
  // The peak flattens, and shared draws keep the sampled curve monotone too.
  CHECK(curve[0].value > curve[1].value);
  CHECK(curve[1].value > curve[2].value);
}

TEST_CASE("adjoint agrees with forward when the drift vanishes") {
  OperatorSpec spec = catalog("laplace", 2);
  ScalarField f = ScalarField::gaussian_isotropic(vec2(0.1, 0.4), 0.6, 1.0);
  Vector X = vec2(0.3, 0.0);
  MCEstimate fw = apply_semigroup(spec, f, X, 0.5, 50000, 7);
  MCEstimate ad = apply_adjoint(spec, f, X, 0.5, 50000, 7);
  CHECK(std::abs(fw.value - ad.value) <
        4.0 * (fw.std_error + ad.std_error) + 1e-9);
}

TEST_CASE("forward samples have the prescribed first two moments") {
  OperatorSpec spec = catalog("laplace", 1);
  double t = 0.3;
  Matrix Y = sample_forward(spec, vec1(1.5), t, 50000, 0xB5EED);
  REQUIRE(Y.rows() == 50000);
  REQUIRE(Y.cols() == 1);
  double mean = Y.col(0).mean();
  double var = (Y.col(0).array() - mean).square().sum() / (Y.rows() - 1);
  CHECK(std::abs(mean - 1.5) < 4.0 * std::sqrt(2.0 * t / 50000.0));
  CHECK(std::abs(var - 2.0 * t) < 4.0 * 2.0 * t * std::sqrt(2.0 / 50000.0));
}

TEST_CASE("importance mixtures cover fields and normalize") {
  ScalarField f = ScalarField::bump(vec1(0.0), 2.0, 1.0, 2);
  GaussianMixture q = GaussianMixture::covering({&f});
  QuadResult mass = adaptive_simpson(
      [&](double x) { return q.pdf(vec1(x)); }, -60.0, 60.0, 1e-10);
  CHECK(mass.value == doctest::Approx(1.0).epsilon(1e-8));

  RandomStream rs(1, 2, 3);
  Vector s = q.sample(rs);
  CHECK(s.size() == 1);
  CHECK(q.pdf(s) > 0.0);

  // Unbounded or irreconcilably scaled supports are refused.
  ScalarField lin = ScalarField::linear(vec1(1.0), 0.0);
  CHECK_THROWS_AS(GaussianMixture::covering({&lin}), SamplerCoverage);
  ScalarField tiny = ScalarField::gaussian_isotropic(vec1(0.0), 1e-5);
  ScalarField huge = ScalarField::gaussian_isotropic(vec1(0.0), 1e4);
  CHECK_THROWS_AS(GaussianMixture::covering({&tiny, &huge}), SamplerCoverage);
}

TEST_CASE("Lp norms by importance sampling match closed forms") {
  // f = 2 exp(-x^2 / (2 * 0.25)): ||f||_1 = sqrt(2 pi), ||f||_2^2 = 2 sqrt(pi).
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.0), 0.5, 2.0);
  CHECK(f.lp_mass_bound(1) == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));

  MCEstimate n1 = lp_norm(f, 1, 80000, 0xB5EED);
  CHECK(std::abs(n1.value - std::sqrt(2.0 * M_PI)) < 4.0 * n1.std_error);
  MCEstimate n2 = lp_norm(f, 2, 80000, 0xB5EED);
  CHECK(std::abs(n2.value - std::sqrt(2.0 * std::sqrt(M_PI))) <
        4.0 * n2.std_error * 2.0 + 1e-6);

  // Distance between a propagated field and its closed form is exactly zero.
  OperatorSpec spec = catalog("laplace", 1);
  ScalarField pf = f.propagate(covariance(spec, 0.3));
  ScalarField ref = ScalarField::gaussian_isotropic(
      vec1(0.0), std::sqrt(0.25 + 0.6), 2.0 * 0.5 / std::sqrt(0.25 + 0.6));
  MCEstimate d = lp_distance(pf, ref, 1, 20000, 5);
  CHECK(d.value < 1e-10);
}

TEST_CASE("two-level composition closes the semigroup law") {
  OperatorSpec spec = catalog("laplace", 2);
  ScalarField f = ScalarField::gaussian_isotropic(vec2(0.0, 0.0), 0.8, 1.0);
  ChapmanReport rep = chapman_kolmogorov_residual(spec, f, vec2(0.2, -0.1),
                                                  0.3, 0.5, 40000, 0xB5EED);
  CHECK(rep.residual < 4.0 * rep.std_error + 1e-3 * std::abs(rep.lhs));
  CHECK(rep.lhs > 0.0);
  CHECK(rep.rhs > 0.0);
}

TEST_CASE("mass samples integrate fields from the density side") {
  // E[m g(W)] = int f g for the point-mass decomposition of f.
  ScalarField f = ScalarField::bump(vec1(0.0), 1.0, 1.5, 2);
  const uint64_t n = 60000;
  double sum = 0.0, sumsq = 0.0;
  for (uint64_t i = 0; i < n; ++i) {
    RandomStream rs(0xB5EED, streams::kNorm, i);
    MassSample ms = f.sample_mass(rs);
    double v = ms.weight * ms.point(0) * ms.point(0);
    sum += v;
    sumsq += v * v;
  }
  MCEstimate est = reduce_mean(sum, sumsq, n, 0xB5EED);
  // int_{-1}^{1} 1.5 (1-x^2)^2 x^2 dx = 1.5 * 16/105.
  CHECK(std::abs(est.value - 1.5 * 16.0 / 105.0) < 4.0 * est.std_error);

  ScalarField lin = ScalarField::linear(vec1(2.0), 1.0);
  RandomStream rs(1, 1, 1);
  CHECK_THROWS_AS(lin.sample_mass(rs), InvalidInput);
}

TEST_CASE("generator matches closed-form derivatives") {
  // A f = f'' for the pure Laplacian; gaussian: f'' = f ((x/s^2)^2 - 1/s^2).
  OperatorSpec spec = catalog("laplace", 1);
  double s2 = 0.49;
  ScalarField f = ScalarField::gaussian_isotropic(vec1(0.0), 0.7, 1.3);
  for (double x : {0.0, 0.4, -1.1}) {
    double fx = f(vec1(x));
    double exact = fx * (x * x / (s2 * s2) - 1.0 / s2);
    CHECK(f.generator_apply(spec, vec1(x)) ==
          doctest::Approx(exact).epsilon(1e-10));
  }
}
