#include <doctest.h>

#include <cmath>

#include "kfp/matlin.hpp"

using namespace kfp;

TEST_CASE("matrix exponential reproduces closed forms") {
  // Rotation generator: exp(tB) = [[cos t, -sin t], [sin t, cos t]].
  Matrix B(2, 2);
  B << 0, -1, 1, 0;
  double t = 0.83;
  Matrix E = mat_exp(B, t);
  CHECK(E(0, 0) == doctest::Approx(std::cos(t)).epsilon(1e-13));
  CHECK(E(0, 1) == doctest::Approx(-std::sin(t)).epsilon(1e-13));
  CHECK(E(1, 0) == doctest::Approx(std::sin(t)).epsilon(1e-13));
  CHECK(E(1, 1) == doctest::Approx(std::cos(t)).epsilon(1e-13));

  // Nilpotent kinetic drift: exp(tB) = I + tB exactly.
  Matrix N(2, 2);
  N << 0, 0, 1, 0;
  Matrix EN = mat_exp(N, 3.7);
  CHECK(EN(0, 0) == 1.0);
  CHECK(EN(1, 0) == doctest::Approx(3.7).epsilon(1e-15));
  CHECK(EN(0, 1) == 0.0);

  // Semigroup property on a dense matrix.
  Matrix A(3, 3);
  A << 0.2, -0.5, 0.1, 0.4, 0.0, -0.3, -0.1, 0.6, 0.25;
  Matrix lhs = mat_exp(A, 1.1);
  Matrix rhs = mat_exp(A, 0.7) * mat_exp(A, 0.4);
  CHECK((lhs - rhs).norm() < 1e-12 * lhs.norm());

  // Negative time inverts.
  Matrix I = mat_exp(A, 0.9) * mat_exp(A, -0.9);
  CHECK((I - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("symmetric spectrum and psd square root") {
  Matrix R(3, 3);
  R << 1.0, 0.2, -0.4, 0.0, 0.8, 0.3, 0.5, -0.1, 1.2;
  Matrix S = R * R.transpose();  // SPD

  SymSpectrum sp = sym_spectrum(S);
  CHECK(sp.min_eig > 0.0);
  CHECK(sp.eigenvalues(0) <= sp.eigenvalues(1));
  CHECK(sp.eigenvalues(1) <= sp.eigenvalues(2));
  Matrix recon = sp.eigenvectors * sp.eigenvalues.asDiagonal() *
                 sp.eigenvectors.transpose();
  CHECK((recon - S).norm() < 1e-12 * S.norm());
  CHECK((sp.eigenvectors.transpose() * sp.eigenvectors -
         Matrix::Identity(3, 3))
            .norm() < 1e-12);

  Matrix root = psd_sqrt(S);
  CHECK((root - root.transpose()).norm() < 1e-12);
  CHECK((root * root - S).norm() < 1e-11 * S.norm());

  // Tiny negative eigenvalues are clamped, genuinely indefinite input throws.
  Matrix almost = S - (S.trace() * 1e-14) * Matrix::Identity(3, 3);
  CHECK_NOTHROW(psd_sqrt(almost));
  Matrix indef = Matrix::Identity(2, 2);
  indef(1, 1) = -0.5;
  CHECK_THROWS_AS(psd_sqrt(indef), NotPsd);
  CHECK(is_psd(S));
  CHECK_FALSE(is_psd(indef));

  Matrix asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(sym_spectrum(asym), InvalidInput);
}

TEST_CASE("logdet stays finite where det overflows") {
  int n = 16;
  double c = 1e40;
  Matrix S = c * Matrix::Identity(n, n);  // det = 1e640, not a double
  CHECK(logdet_spd(S) == doctest::Approx(n * std::log(c)).epsilon(1e-13));

  Matrix R(3, 3);
  R << 2.0, 0.1, 0.0, 0.3, 1.5, -0.2, 0.0, 0.4, 0.9;
  Matrix T = R * R.transpose();
  CHECK(logdet_spd(T) ==
        doctest::Approx(std::log(T.determinant())).epsilon(1e-12));
}

TEST_CASE("shape guards reject malformed matrices") {
  Matrix rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(require_square(rect, "test"), InvalidInput);

  Matrix big = Matrix::Identity(kMaxDim + 1, kMaxDim + 1);
  CHECK_THROWS_AS(require_square(big, "test"), InvalidInput);

  Matrix nan2 = Matrix::Zero(2, 2);
  nan2(0, 0) = std::nan("");
  CHECK_THROWS_AS(require_square(nan2, "test"), InvalidInput);

  CHECK(is_symmetric(Matrix::Identity(4, 4)));
  Matrix skew(2, 2);
  skew << 0, 1, -1, 0;
  CHECK_FALSE(is_symmetric(skew));
}
