#include "kfp/matlin.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace kfp {

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols())
    throw InvalidInput(std::string(what) + ": matrix is not square");
  if (A.rows() < kMinDim || A.rows() > kMaxDim)
    throw InvalidInput(std::string(what) + ": dimension " +
                       std::to_string(A.rows()) + " outside [" +
                       std::to_string(kMinDim) + "," + std::to_string(kMaxDim) + "]");
  if (!A.allFinite())
    throw InvalidInput(std::string(what) + ": non-finite entries");
}

bool is_symmetric(const Matrix& A, double tol) {
  if (A.rows() != A.cols()) return false;
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix mat_exp(const Matrix& A, double t) {
  require_square(A, "mat_exp");
  if (!std::isfinite(t)) throw InvalidInput("mat_exp: non-finite time");
  Matrix tA = t * A;
  Matrix E = tA.exp();
  if (!E.allFinite()) throw InvalidInput("mat_exp: overflow in exponential");
  return E;
}

SymSpectrum sym_spectrum(const Matrix& S, double sym_tol) {
  require_square(S, "sym_spectrum");
  if (!is_symmetric(S, sym_tol))
    throw InvalidInput("sym_spectrum: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  if (es.info() != Eigen::Success)
    throw InvalidInput("sym_spectrum: eigensolver failed");
  SymSpectrum out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.min_eig = out.eigenvalues.minCoeff();
  out.max_eig = out.eigenvalues.maxCoeff();
  return out;
}

Matrix psd_sqrt(const Matrix& S, double tol) {
  SymSpectrum sp = sym_spectrum(S);
  double scale = std::max(1.0, sp.eigenvalues.cwiseAbs().maxCoeff());
  Vector lam = sp.eigenvalues;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol * scale)
      throw NotPsd("psd_sqrt: eigenvalue " + std::to_string(lam[i]) +
                   " below PSD tolerance");
    lam[i] = std::sqrt(std::max(0.0, lam[i]));
  }
  return sp.eigenvectors * lam.asDiagonal() * sp.eigenvectors.transpose();
}

bool is_psd(const Matrix& S, double tol) {
  if (!is_symmetric(S, tol)) return false;
  SymSpectrum sp = sym_spectrum(S);
  double scale = std::max(1.0, sp.eigenvalues.cwiseAbs().maxCoeff());
  return sp.min_eig >= -tol * scale;
}

double logdet_spd(const Matrix& S) {
  SymSpectrum sp = sym_spectrum(S);
  if (sp.min_eig <= 0.0)
    throw NotPsd("logdet_spd: matrix is not positive definite");
  return sp.eigenvalues.array().log().sum();
}

}  // namespace kfp
