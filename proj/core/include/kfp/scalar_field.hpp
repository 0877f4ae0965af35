#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kfp/matlin.hpp"
#include "kfp/operator_model.hpp"
#include "kfp/region.hpp"
#include "kfp/rng.hpp"

namespace kfp {

// Ball around `center` outside which the field is below the cut used to
// build importance samplers.
struct FieldSupport {
  Vector center;
  double radius = 0.0;
};

// A point mass sample (W, m) with E[m * delta_W] = f, used to evaluate
// integrals against the field from the density side.
struct MassSample {
  Vector point;
  double weight = 0.0;
};

// Test functions the semigroup machinery is applied to. Gaussian and linear
// fields are closed under the semigroup (exact propagation), which gives the
// noise-free inner layer for bound checks; bump and indicator fields are
// evaluated by Monte Carlo only.
class ScalarField {
 public:
  enum class Kind { Gaussian, Bump, Linear, Indicator, Sum };

  // amp * exp(-1/2 (X-mu)^T Sigma^{-1} (X-mu)); Sigma symmetric positive
  // definite. amp may be negative.
  static ScalarField gaussian(const Vector& mu, const Matrix& Sigma, double amp = 1.0);
  static ScalarField gaussian_isotropic(const Vector& mu, double sigma, double amp = 1.0);
  // amp * (1 - |X-c|^2/R^2)^k on the ball, 0 outside; k >= 1.
  static ScalarField bump(const Vector& c, double R, double amp = 1.0, int k = 2);
  // <a, X> + b. Not integrable; only valid where a moment exists.
  static ScalarField linear(const Vector& a, double b = 0.0);
  static ScalarField indicator(RegionPtr E);
  static ScalarField weighted_sum(std::vector<std::pair<double, ScalarField>> terms);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  double operator()(const Vector& X) const;

  // Upper bound for |f|.
  double sup_norm() const;

  // Exact integral of |f|^p for p in {1,2} (gaussian/indicator closed form,
  // bump via the radial Beta integral). Throws for linear fields. For sums
  // this is the triangle-inequality bound, which is what the tail
  // certificates need.
  double lp_mass_bound(int p = 1) const;

  FieldSupport effective_support(double rel_cut = 1e-9) const;

  // True when P_t f has the same closed form (gaussian, linear, sums of
  // those).
  bool closed_under_semigroup() const;

  // Exact P_t f as a field; requires closed_under_semigroup().
  ScalarField propagate(const CovarianceBundle& cb) const;

  // Pointwise (A f)(X) from closed-form derivatives; gaussian/linear/sums.
  double generator_apply(const OperatorSpec& spec, const Vector& X) const;

  // Draw (W, m) with E[m delta_W] = f. Throws for linear fields.
  MassSample sample_mass(RandomStream& rs) const;

  std::string describe() const;

  // Introspection for serialization.
  const Vector& gaussian_mean() const;
  const Matrix& gaussian_cov() const;
  double amplitude() const { return amp_; }
  const RegionPtr& region() const { return region_; }
  const Vector& linear_coeffs() const { return mu_; }
  double linear_offset() const { return amp_; }
  double bump_radius() const { return radius_; }
  int bump_power() const { return power_; }
  const Vector& bump_center() const { return mu_; }
  const std::vector<std::pair<double, ScalarField>>& terms() const { return terms_; }

 private:
  ScalarField() = default;

  Kind kind_ = Kind::Gaussian;
  int dim_ = 0;
  // Gaussian: mu_, cov_, amp_. Linear: mu_ = coefficients, amp_ = offset.
  // Bump: mu_ = center, radius_, amp_, power_.
  Vector mu_;
  Matrix cov_;
  Matrix prec_;       // cov_^{-1}, cached
  Matrix chol_;       // sqrt factor of cov_, cached for mass sampling
  double cov_logdet_ = 0.0;
  double amp_ = 0.0;
  double radius_ = 0.0;
  int power_ = 2;
  RegionPtr region_;
  std::vector<std::pair<double, ScalarField>> terms_;
};

}  // namespace kfp
