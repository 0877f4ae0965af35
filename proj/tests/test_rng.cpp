#include <doctest.h>

#include <cmath>
#include <vector>

#include "kfp/parallel.hpp"
#include "kfp/rng.hpp"

using namespace kfp;

TEST_CASE("philox blocks are deterministic and counter-sensitive") {
  std::array<uint32_t, 4> ctr = {1, 2, 3, 4};
  std::array<uint32_t, 2> key = {0xdeadbeef, 0x5eed};
  auto a = philox4x32(ctr, key);
  auto b = philox4x32(ctr, key);
  CHECK(a == b);

  ctr[0] ^= 1;
  auto c = philox4x32(ctr, key);
  CHECK(a != c);

  key[1] ^= 1;
  auto d = philox4x32(ctr, key);
  CHECK(c != d);
}

TEST_CASE("random streams replay exactly and do not collide") {
  RandomStream r1(42, 7, 1000);
  RandomStream r2(42, 7, 1000);
  for (int i = 0; i < 64; ++i) {
    double u = r1.u01();
    CHECK(u == r2.u01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }

  // Neighbouring sample indices and streams give different draws.
  RandomStream rs(42, 7, 1001), rt(42, 8, 1000), ru(43, 7, 1000);
  RandomStream base(42, 7, 1000);
  double b0 = base.u01();
  CHECK(b0 != rs.u01());
  CHECK(b0 != rt.u01());
  CHECK(b0 != ru.u01());
}

TEST_CASE("normal draws have the right first moments") {
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    RandomStream rs(0xB5EED, 1, i);
    double z = rs.normal();
    sum += z;
    sumsq += z * z;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(double(n)));          // se = 1/sqrt(n)
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / double(n)));

  Eigen::VectorXd v(5);
  RandomStream rs(1, 2, 3);
  rs.fill_normal(v);
  CHECK(v.allFinite());
  RandomStream rs2(1, 2, 3);
  Eigen::VectorXd w(5);
  rs2.fill_normal(w);
  CHECK(v == w);
}

TEST_CASE("accumulation is bit-identical for any worker count") {
  const uint64_t n = 100001;  // not a multiple of the chunk size
  auto per = [](uint64_t i, double* out) {
    RandomStream rs(9, 4, i);
    out[0] = rs.normal();
    out[1] = rs.u01() * rs.u01();
  };
  std::vector<double> s1, q1, s4, q4, s3, q3;
  mc_accumulate(n, 2, 1, per, s1, q1);
  mc_accumulate(n, 2, 4, per, s4, q4);
  mc_accumulate(n, 2, 3, per, s3, q3);
  CHECK(s1 == s4);
  CHECK(q1 == q4);
  CHECK(s1 == s3);
  CHECK(q1 == q3);
}

TEST_CASE("mean reduction carries honest standard errors") {
  MCEstimate e = mc_mean(50000, 4, 123, [](uint64_t i) {
    RandomStream rs(123, 1, i);
    return 3.0 + rs.normal();
  });
  CHECK(e.n == 50000);
  CHECK(e.std_error == doctest::Approx(1.0 / std::sqrt(50000.0)).epsilon(0.05));
  CHECK(std::abs(e.value - 3.0) < 4.0 * e.std_error);

  // Degenerate cases.
  MCEstimate z = reduce_mean(0.0, 0.0, 0, 1);
  CHECK(z.value == 0.0);
  CHECK(z.std_error == 0.0);
  MCEstimate c = mc_mean(1000, 2, 5, [](uint64_t) { return 2.5; });
  CHECK(c.value == 2.5);
  CHECK(c.std_error == 0.0);
}

TEST_CASE("worker exceptions propagate out of the pool") {
  auto bad = [](uint64_t i, double*) {
    if (i == 777) throw std::runtime_error("boom");
  };
  std::vector<double> s, q;
  CHECK_THROWS_WITH_AS(mc_accumulate(10000, 1, 4, bad, s, q), "boom",
                       std::runtime_error);
}
