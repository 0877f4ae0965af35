#include "kfp/semigroup.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace kfp {

Matrix sample_forward(const OperatorSpec& spec, const Vector& X, double t,
                      uint64_t n, uint64_t seed) {
  if (X.size() != spec.dim) throw InvalidInput("sample_forward: dimension mismatch");
  CovarianceBundle cb = covariance(spec, t);
  Vector mean = cb.exp_tB * X;
  Matrix out(n, spec.dim);
  Vector z(spec.dim);
  for (uint64_t i = 0; i < n; ++i) {
    RandomStream rs(seed, streams::kForward, i);
    rs.fill_normal(z);
    out.row(i) = (mean + cb.sqrt_cov * z).transpose();
  }
  return out;
}

MCEstimate apply_semigroup(const OperatorSpec& spec, const ScalarField& f,
                           const Vector& X, double t, uint64_t n, uint64_t seed,
                           int workers) {
  if (X.size() != spec.dim || f.dim() != spec.dim)
    throw InvalidInput("apply_semigroup: dimension mismatch");
  CovarianceBundle cb = covariance(spec, t);
  Vector mean = cb.exp_tB * X;
  return mc_mean(n, workers, seed, [&](uint64_t i) {
    RandomStream rs(seed, streams::kForward, i);
    Vector z(spec.dim);
    rs.fill_normal(z);
    return f(mean + cb.sqrt_cov * z);
  });
}

MCEstimate apply_adjoint(const OperatorSpec& spec, const ScalarField& f,
                         const Vector& X, double t, uint64_t n, uint64_t seed,
                         int workers) {
  if (X.size() != spec.dim || f.dim() != spec.dim)
    throw InvalidInput("apply_adjoint: dimension mismatch");
  CovarianceBundle cb = covariance(spec, t);
  Matrix Einv = mat_exp(spec.B, -t);
  Matrix cov_adj = Einv * (2.0 * cb.gram) * Einv.transpose();
  Matrix sq = psd_sqrt(0.5 * (cov_adj + cov_adj.transpose()));
  double mass = std::exp(-t * spec.trace_B());
  Vector mean = Einv * X;
  MCEstimate e = mc_mean(n, workers, seed, [&](uint64_t i) {
    RandomStream rs(seed, streams::kAdjoint, i);
    Vector z(spec.dim);
    rs.fill_normal(z);
    return f(mean + sq * z);
  });
  e.value *= mass;
  e.std_error *= mass;
  return e;
}

std::vector<MCEstimate> semigroup_curve(const OperatorSpec& spec,
                                        const ScalarField& f, const Vector& X,
                                        const std::vector<double>& ts, uint64_t n,
                                        uint64_t seed, int workers) {
  if (X.size() != spec.dim || f.dim() != spec.dim)
    throw InvalidInput("semigroup_curve: dimension mismatch");
  const int m = static_cast<int>(ts.size());
  std::vector<CovarianceBundle> cbs;
  cbs.reserve(m);
  std::vector<Vector> means(m);
  for (int k = 0; k < m; ++k) {
    cbs.push_back(covariance(spec, ts[k]));
    means[k] = cbs[k].exp_tB * X;
  }
  std::vector<double> sum, sumsq;
  mc_accumulate(n, m, workers,
                [&](uint64_t i, double* out) {
                  RandomStream rs(seed, streams::kForward, i);
                  Vector z(spec.dim);
                  rs.fill_normal(z);
                  for (int k = 0; k < m; ++k)
                    out[k] = f(means[k] + cbs[k].sqrt_cov * z);
                },
                sum, sumsq);
  std::vector<MCEstimate> out(m);
  for (int k = 0; k < m; ++k) out[k] = reduce_mean(sum[k], sumsq[k], n, seed);
  return out;
}

GaussianMixture::GaussianMixture(std::vector<Component> comps)
    : comps_(std::move(comps)) {
  if (comps_.empty()) throw InvalidInput("mixture: no components");
  double total = 0.0;
  for (auto& c : comps_) {
    if (!(c.sigma > 0.0) || !(c.weight > 0.0))
      throw InvalidInput("mixture: bad component");
    total += c.weight;
  }
  for (auto& c : comps_) c.weight /= total;
}

GaussianMixture GaussianMixture::covering(
    const std::vector<const ScalarField*>& fields, double inflate) {
  if (fields.empty()) throw InvalidInput("mixture: no fields");
  std::vector<Component> comps;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (const ScalarField* f : fields) {
    FieldSupport s = f->effective_support(1e-9);
    if (!std::isfinite(s.radius))
      throw SamplerCoverage("mixture: field has unbounded support");
    double r = std::max(s.radius, 1e-8);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    Component c;
    c.center = s.center;
    // Effective support radius corresponds to a ~6 sigma cut; inflate and
    // divide back so the mixture is wider than the field.
    c.sigma = inflate * r / 3.0;
    c.weight = 1.0;
    comps.push_back(std::move(c));
  }
  if (rmax / rmin > 1e3)
    throw SamplerCoverage("mixture: field scales differ by more than 1e3");
  return GaussianMixture(std::move(comps));
}

double GaussianMixture::pdf(const Vector& X) const {
  double v = 0.0;
  int n = dim();
  for (const auto& c : comps_) {
    double q = (X - c.center).squaredNorm() / (c.sigma * c.sigma);
    v += c.weight * std::exp(-0.5 * q) /
         std::pow(2.0 * M_PI * c.sigma * c.sigma, 0.5 * n);
  }
  return v;
}

Vector GaussianMixture::sample(RandomStream& rs) const {
  double u = rs.u01();
  size_t pick = comps_.size() - 1;
  double acc = 0.0;
  for (size_t i = 0; i < comps_.size(); ++i) {
    acc += comps_[i].weight;
    if (u <= acc) {
      pick = i;
      break;
    }
  }
  const Component& c = comps_[pick];
  Vector z(c.center.size());
  rs.fill_normal(z);
  return c.center + c.sigma * z;
}

namespace {

MCEstimate lp_integral(const GaussianMixture& q, uint64_t n, uint64_t seed,
                       int workers,
                       const std::function<double(const Vector&)>& h, int p) {
  MCEstimate e = mc_mean(n, workers, seed, [&](uint64_t i) {
    RandomStream rs(seed, streams::kLp, i);
    Vector X = q.sample(rs);
    double dens = q.pdf(X);
    return std::pow(std::abs(h(X)), p) / dens;
  });
  // Norm = (integral)^{1/p}; delta method for the error.
  MCEstimate out = e;
  double v = std::max(e.value, 0.0);
  out.value = std::pow(v, 1.0 / p);
  out.std_error = v > 0.0 ? e.std_error / p * std::pow(v, 1.0 / p - 1.0) : e.std_error;
  return out;
}

}  // namespace

MCEstimate lp_distance_with(const GaussianMixture& q, const ScalarField& f,
                            const ScalarField& g, int p, uint64_t n, uint64_t seed,
                            int workers) {
  if (p != 1 && p != 2) throw InvalidInput("lp_distance: p must be 1 or 2");
  if (f.dim() != g.dim()) throw InvalidInput("lp_distance: dimension mismatch");
  return lp_integral(q, n, seed, workers,
                     [&](const Vector& X) { return f(X) - g(X); }, p);
}

MCEstimate lp_distance(const ScalarField& f, const ScalarField& g, int p,
                       uint64_t n, uint64_t seed, int workers) {
  GaussianMixture q = GaussianMixture::covering({&f, &g});
  return lp_distance_with(q, f, g, p, n, seed, workers);
}

MCEstimate lp_norm(const ScalarField& f, int p, uint64_t n, uint64_t seed,
                   int workers) {
  if (p != 1 && p != 2) throw InvalidInput("lp_norm: p must be 1 or 2");
  GaussianMixture q = GaussianMixture::covering({&f});
  return lp_integral(q, n, seed, workers,
                     [&](const Vector& X) { return f(X); }, p);
}

ChapmanReport chapman_kolmogorov_residual(const OperatorSpec& spec,
                                          const ScalarField& f, const Vector& X,
                                          double s, double t, uint64_t n,
                                          uint64_t seed, int workers) {
  if (!(s > 0.0) || !(t > 0.0))
    throw InvalidInput("chapman_kolmogorov_residual: times must be positive");
  ChapmanReport rep;
  rep.lhs_est = apply_semigroup(spec, f, X, s + t, n, seed, workers);

  // Two-level route: outer points from time s, inner kernel draws of length
  // t from each outer point; sqrt(n) x sqrt(n) so both levels shrink
  // together.
  uint64_t n_out = std::max<uint64_t>(2, static_cast<uint64_t>(std::sqrt(static_cast<double>(n))));
  uint64_t n_in = n_out;
  CovarianceBundle cb_s = covariance(spec, s);
  CovarianceBundle cb_t = covariance(spec, t);
  Vector mean_s = cb_s.exp_tB * X;
  rep.rhs_est = mc_mean(n_out, workers, seed, [&](uint64_t i) {
    RandomStream rs(seed, streams::kChapmanOuter, i);
    Vector z(spec.dim);
    rs.fill_normal(z);
    Vector Y = mean_s + cb_s.sqrt_cov * z;
    Vector mean_t = cb_t.exp_tB * Y;
    double acc = 0.0;
    RandomStream rsi(seed, streams::kChapmanInner, i);
    for (uint64_t j = 0; j < n_in; ++j) {
      rsi.fill_normal(z);
      acc += f(mean_t + cb_t.sqrt_cov * z);
    }
    return acc / static_cast<double>(n_in);
  });
  rep.rhs_est.n = n_out * n_in;

  rep.lhs = rep.lhs_est.value;
  rep.rhs = rep.rhs_est.value;
  rep.residual = std::abs(rep.lhs - rep.rhs);
  rep.std_error = std::hypot(rep.lhs_est.std_error, rep.rhs_est.std_error);
  return rep;
}

}  // namespace kfp
