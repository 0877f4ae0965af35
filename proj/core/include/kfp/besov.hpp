#pragma once

// Besov seminorm, level-set coarea identity, layer-cake inequality, and the
// strong Sobolev embeddings (single- and two-regime).

#include <cstdint>
#include <string>
#include <vector>

#include "kfp/operator_model.hpp"
#include "kfp/parallel.hpp"
#include "kfp/region.hpp"
#include "kfp/scalar_field.hpp"

namespace kfp {

// Seminorm integral int_0^inf t^{-1-alpha/2} G(t) dt with the measured
// heat-content curve G(t) = int P_t(|f - f(X)|)(X) dX attached.
struct BesovReport {
  double alpha = 0.0;
  double value = 0.0;       // seminorm estimate
  double quad_error = 0.0;  // Simpson refinement gap + far-tail bracket
  double mc_error = 0.0;    // sampling noise incl. the small-time fit
  double beta = 0.0;        // fitted small-time exponent of G
  bool divergence_warning = false;
  std::vector<double> times;
  std::vector<MCEstimate> g;  // G at each grid node
};

// G(t) on the given grid: outer points from an importance mixture covering
// f, one forward kernel draw per outer point per node, common random numbers
// across nodes. `n` is the number of outer points.
std::vector<MCEstimate> besov_curve(const OperatorSpec& spec,
                                    const ScalarField& f,
                                    const std::vector<double>& ts, uint64_t n,
                                    uint64_t seed,
                                    int workers = default_workers());

BesovReport besov_seminorm_detail(const OperatorSpec& spec,
                                  const ScalarField& f, double alpha, int p,
                                  uint64_t n, uint64_t seed,
                                  int workers = default_workers());

// Seminorm with combined error bar (std_error = quad + mc of the detail
// report). Only p = 1 is evaluated.
MCEstimate besov_seminorm(const OperatorSpec& spec, const ScalarField& f,
                          double alpha, int p, uint64_t n, uint64_t seed,
                          int workers = default_workers());

// Superlevel-set geometry of a quasi-concave profile: gaussians (radial or
// anisotropic) give ellipsoids, bumps give balls.
class LevelSetProfile {
 public:
  explicit LevelSetProfile(ScalarField f);

  const ScalarField& field() const { return f_; }
  double sigma_max() const { return sigma_max_; }

  // {f > sigma} for 0 < sigma < sigma_max; nullptr when empty.
  RegionPtr level_region(double sigma) const;

  // |{f > sigma}| in closed form (0 when empty).
  double level_measure(double sigma) const;

 private:
  ScalarField f_;
  double sigma_max_ = 0.0;
};

struct CoareaReport {
  double lhs = 0.0;  // Besov seminorm at alpha = 2s
  double lhs_err = 0.0;
  double rhs = 0.0;  // Gamma(1-s)/s * int_0^sigma_max per(E_sigma, s) dsigma
  double rhs_err = 0.0;
  double residual = 0.0;  // |lhs - rhs| / lhs
  // Level table (sigma, |E_sigma|, per value) at the quadrature nodes.
  std::vector<double> sigma, level_meas, per_value;
};

// Both sides of the coarea identity; sigma integral by Gauss-Legendre with
// n_levels nodes, each level evaluated with budget n.
CoareaReport coarea_residual(const OperatorSpec& spec,
                             const LevelSetProfile& prof, double s,
                             int n_levels, uint64_t n, uint64_t seed,
                             int workers = default_workers());

struct LayerCakeReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
};

// Layer-cake inequality for the non-increasing step function that equals
// values[k] on [edges[k], edges[k+1]) and 0 beyond the last edge; both sides
// are evaluated exactly for that step function, so the check is rigorous.
LayerCakeReport layercake_check(const std::vector<double>& edges,
                                const std::vector<double>& values, double D,
                                double s);

struct SobolevReport {
  std::string regime;  // "single" or "two-regime"
  double D0 = 0.0, Dinf = 0.0;
  double q0 = 0.0, qinf = 0.0;  // target exponents (equal when single)
  double sigma_f = 0.0;         // split threshold (two-regime only)
  double lhs = 0.0;             // ||f||_q, or ||f1||_q0 + ||f2||_qinf
  double lhs_err = 0.0;
  double seminorm = 0.0;
  double seminorm_err = 0.0;
  double i_s = 0.0;  // isoperimetric constant fed into the bound
  double rhs = 0.0;  // (s or 2s)/(i_s Gamma(1-s)) * seminorm
  double rhs_err = 0.0;
  bool ok = false;
};

// Embedding check for a quasi-concave profile. Single regime bounds the
// L^{D/(D-2s)} norm; the two-regime variant splits f at the threshold
// sigma_f = sup{sigma : |E_sigma| > 1} and bounds the sum norm
// ||f1||_{q0} + ||f2||_{qinf} by the same layer-cake route. The regime is
// chosen from the measured intrinsic dimensions.
SobolevReport sobolev_ratio(const OperatorSpec& spec,
                            const LevelSetProfile& prof, double s, uint64_t n,
                            uint64_t seed, int workers = default_workers());

}  // namespace kfp
