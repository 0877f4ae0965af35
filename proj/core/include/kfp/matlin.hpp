#pragma once

#include <Eigen/Dense>

#include "kfp/errors.hpp"

namespace kfp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dimensions accepted throughout the library. One-dimensional operators are
// legal (the 1-D heat kernel is the main analytic cross-check substrate).
constexpr int kMinDim = 1;
constexpr int kMaxDim = 16;

// Throws InvalidInput unless A is square, finite and within the size range.
void require_square(const Matrix& A, const char* what);

bool is_symmetric(const Matrix& A, double tol = 1e-12);

// exp(tA), scaling-and-squaring Pade. t may be negative.
Matrix mat_exp(const Matrix& A, double t = 1.0);

struct SymSpectrum {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // columns, orthonormal
  double min_eig = 0.0;
  double max_eig = 0.0;
};

// Spectral decomposition of a symmetric matrix. Throws InvalidInput if the
// input is not (numerically) symmetric.
SymSpectrum sym_spectrum(const Matrix& S, double sym_tol = 1e-10);

// Symmetric PSD square root. Eigenvalues in [-tol*scale, 0) are clamped to
// zero; anything more negative throws NotPsd.
Matrix psd_sqrt(const Matrix& S, double tol = 1e-10);

// true iff S is symmetric with spectrum >= -tol*scale.
bool is_psd(const Matrix& S, double tol = 1e-10);

// log(det(S)) for symmetric positive definite S, computed from the spectrum
// so it stays finite where det itself would overflow.
double logdet_spd(const Matrix& S);

}  // namespace kfp
