#pragma once

#include <vector>

#include "kfp/operator_model.hpp"
#include "kfp/parallel.hpp"
#include "kfp/scalar_field.hpp"

namespace kfp {

// Stream ids keep the independent Monte Carlo layers of one run from
// colliding while staying reproducible.
namespace streams {
constexpr uint64_t kForward = 1;
constexpr uint64_t kAdjoint = 2;
constexpr uint64_t kLp = 3;
constexpr uint64_t kChapmanOuter = 4;
constexpr uint64_t kChapmanInner = 5;
constexpr uint64_t kDeficit = 6;
constexpr uint64_t kFrac = 7;
constexpr uint64_t kBesov = 8;
constexpr uint64_t kNorm = 9;
constexpr uint64_t kProfile = 10;
}  // namespace streams

// Exact forward samples of the process at time t started at X:
// Y = e^{tB} X + sqrt(2 t K(t)) Z. One row per sample.
Matrix sample_forward(const OperatorSpec& spec, const Vector& X, double t,
                      uint64_t n, uint64_t seed);

// P_t f(X) = E[f(Y)].
MCEstimate apply_semigroup(const OperatorSpec& spec, const ScalarField& f,
                           const Vector& X, double t, uint64_t n, uint64_t seed,
                           int workers = default_workers());

// Adjoint semigroup: P*_t f(X) = e^{-t tr B} E[f(Y')] with
// Y' = e^{-tB} X + sqrt(2t e^{-tB} K(t) e^{-tB^T}) Z.
MCEstimate apply_adjoint(const OperatorSpec& spec, const ScalarField& f,
                         const Vector& X, double t, uint64_t n, uint64_t seed,
                         int workers = default_workers());

// P_t f(X) at several times with common random numbers: the same Z drives
// every t, so differences along the curve are smooth per sample.
std::vector<MCEstimate> semigroup_curve(const OperatorSpec& spec,
                                        const ScalarField& f, const Vector& X,
                                        const std::vector<double>& ts, uint64_t n,
                                        uint64_t seed,
                                        int workers = default_workers());

// Isotropic Gaussian mixture used as an importance density over field
// supports. Component scales derive from the fields' effective supports.
class GaussianMixture {
 public:
  struct Component {
    Vector center;
    double sigma = 1.0;
    double weight = 1.0;
  };

  explicit GaussianMixture(std::vector<Component> comps);

  // Mixture roughly covering the union of the fields' effective supports,
  // inflated for safety. Throws SamplerCoverage when supports are too
  // disparate for one mixture (effective radius ratio above 1e3) or
  // unbounded.
  static GaussianMixture covering(const std::vector<const ScalarField*>& fields,
                                  double inflate = 2.0);

  int dim() const { return static_cast<int>(comps_[0].center.size()); }
  double pdf(const Vector& X) const;
  Vector sample(RandomStream& rs) const;
  const std::vector<Component>& components() const { return comps_; }

 private:
  std::vector<Component> comps_;
};

// || f - g ||_p for p in {1,2} by importance sampling against a covering
// mixture. Returns the norm (not its p-th power); std_error is propagated
// through the root.
MCEstimate lp_distance(const ScalarField& f, const ScalarField& g, int p,
                       uint64_t n, uint64_t seed, int workers = default_workers());

// || f ||_p with the same machinery.
MCEstimate lp_norm(const ScalarField& f, int p, uint64_t n, uint64_t seed,
                   int workers = default_workers());

// Variant with a caller-supplied sampler (used when the default support
// heuristic is too tight, e.g. fields spread by the semigroup).
MCEstimate lp_distance_with(const GaussianMixture& q, const ScalarField& f,
                            const ScalarField& g, int p, uint64_t n, uint64_t seed,
                            int workers = default_workers());

struct ChapmanReport {
  double lhs = 0.0;        // P_{s+t} f(X), single pass
  double rhs = 0.0;        // P_s(P_t f)(X), two-level pass
  double residual = 0.0;   // |lhs - rhs|
  double std_error = 0.0;  // combined
  MCEstimate lhs_est, rhs_est;
};

// Two-level composition check of the semigroup law. The inner level uses
// floor(sqrt(n)) draws per outer point.
ChapmanReport chapman_kolmogorov_residual(const OperatorSpec& spec,
                                          const ScalarField& f, const Vector& X,
                                          double s, double t, uint64_t n,
                                          uint64_t seed,
                                          int workers = default_workers());

}  // namespace kfp
