#include "kfp/scalar_field.hpp"

#include <cmath>
#include <limits>

namespace kfp {

namespace {

double gaussian_l1(double amp, int n, double cov_logdet) {
  return std::abs(amp) * std::pow(2.0 * M_PI, 0.5 * n) * std::exp(0.5 * cov_logdet);
}

// integral over the unit ball of (1-|u|^2)^k = omega_n * n/2 * B(n/2, k+1).
double bump_shape_integral(int n, int k) {
  double b = std::exp(std::lgamma(0.5 * n) + std::lgamma(k + 1.0) -
                      std::lgamma(0.5 * n + k + 1.0));
  return omega_n(n) * 0.5 * n * b;
}

}  // namespace

ScalarField ScalarField::gaussian(const Vector& mu, const Matrix& Sigma, double amp) {
  ScalarField f;
  f.kind_ = Kind::Gaussian;
  f.dim_ = static_cast<int>(mu.size());
  if (Sigma.rows() != f.dim_ || Sigma.cols() != f.dim_)
    throw InvalidInput("gaussian field: covariance shape mismatch");
  SymSpectrum sp = sym_spectrum(Sigma);
  if (sp.min_eig <= 0.0) throw NotPsd("gaussian field: covariance not positive definite");
  f.mu_ = mu;
  f.cov_ = 0.5 * (Sigma + Sigma.transpose());
  f.prec_ = sp.eigenvectors * sp.eigenvalues.cwiseInverse().asDiagonal() *
            sp.eigenvectors.transpose();
  f.chol_ = sp.eigenvectors * sp.eigenvalues.cwiseSqrt().asDiagonal() *
            sp.eigenvectors.transpose();
  f.cov_logdet_ = sp.eigenvalues.array().log().sum();
  f.amp_ = amp;
  return f;
}

ScalarField ScalarField::gaussian_isotropic(const Vector& mu, double sigma, double amp) {
  if (!(sigma > 0.0)) throw InvalidInput("gaussian field: sigma must be positive");
  return gaussian(mu, sigma * sigma * Matrix::Identity(mu.size(), mu.size()), amp);
}

ScalarField ScalarField::bump(const Vector& c, double R, double amp, int k) {
  if (!(R > 0.0) || k < 1) throw InvalidInput("bump field: bad parameters");
  ScalarField f;
  f.kind_ = Kind::Bump;
  f.dim_ = static_cast<int>(c.size());
  f.mu_ = c;
  f.radius_ = R;
  f.amp_ = amp;
  f.power_ = k;
  return f;
}

ScalarField ScalarField::linear(const Vector& a, double b) {
  ScalarField f;
  f.kind_ = Kind::Linear;
  f.dim_ = static_cast<int>(a.size());
  f.mu_ = a;
  f.amp_ = b;
  return f;
}

ScalarField ScalarField::indicator(RegionPtr E) {
  if (!E) throw InvalidInput("indicator field: null region");
  ScalarField f;
  f.kind_ = Kind::Indicator;
  f.dim_ = E->dim();
  f.region_ = std::move(E);
  f.amp_ = 1.0;
  return f;
}

ScalarField ScalarField::weighted_sum(std::vector<std::pair<double, ScalarField>> terms) {
  if (terms.empty()) throw InvalidInput("sum field: no terms");
  ScalarField f;
  f.kind_ = Kind::Sum;
  f.dim_ = terms[0].second.dim();
  for (const auto& [w, g] : terms) {
    (void)w;
    if (g.dim() != f.dim_) throw InvalidInput("sum field: mixed dimensions");
  }
  f.terms_ = std::move(terms);
  return f;
}

double ScalarField::operator()(const Vector& X) const {
  switch (kind_) {
    case Kind::Gaussian: {
      Vector d = X - mu_;
      return amp_ * std::exp(-0.5 * d.dot(prec_ * d));
    }
    case Kind::Bump: {
      double r2 = (X - mu_).squaredNorm() / (radius_ * radius_);
      if (r2 >= 1.0) return 0.0;
      return amp_ * std::pow(1.0 - r2, power_);
    }
    case Kind::Linear:
      return mu_.dot(X) + amp_;
    case Kind::Indicator:
      return region_->contains(X) ? 1.0 : 0.0;
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& [w, g] : terms_) s += w * g(X);
      return s;
    }
  }
  return 0.0;
}

double ScalarField::sup_norm() const {
  switch (kind_) {
    case Kind::Gaussian:
    case Kind::Bump:
      return std::abs(amp_);
    case Kind::Linear:
      return std::numeric_limits<double>::infinity();
    case Kind::Indicator:
      return 1.0;
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& [w, g] : terms_) s += std::abs(w) * g.sup_norm();
      return s;
    }
  }
  return 0.0;
}

double ScalarField::lp_mass_bound(int p) const {
  if (p != 1 && p != 2) throw InvalidInput("lp_mass_bound: p must be 1 or 2");
  switch (kind_) {
    case Kind::Gaussian: {
      if (p == 1) return gaussian_l1(amp_, dim_, cov_logdet_);
      // (amp e^{-q/2})^2 has covariance Sigma/2.
      return amp_ * amp_ * std::pow(2.0 * M_PI, 0.5 * dim_) *
             std::exp(0.5 * (cov_logdet_ - dim_ * std::log(2.0)));
    }
    case Kind::Bump: {
      double a = std::abs(amp_);
      double shape = bump_shape_integral(dim_, p * power_);
      return std::pow(a, p) * std::pow(radius_, dim_) * shape;
    }
    case Kind::Linear:
      throw InvalidInput("lp_mass_bound: linear field is not integrable");
    case Kind::Indicator:
      return region_->measure();
    case Kind::Sum: {
      if (p == 1) {
        double s = 0.0;
        for (const auto& [w, g] : terms_) s += std::abs(w) * g.lp_mass_bound(1);
        return s;
      }
      // Minkowski bound, squared.
      double s = 0.0;
      for (const auto& [w, g] : terms_)
        s += std::abs(w) * std::sqrt(g.lp_mass_bound(2));
      return s * s;
    }
  }
  return 0.0;
}

FieldSupport ScalarField::effective_support(double rel_cut) const {
  switch (kind_) {
    case Kind::Gaussian: {
      SymSpectrum sp = sym_spectrum(cov_);
      double r = std::sqrt(2.0 * sp.max_eig * std::log(1.0 / rel_cut));
      return {mu_, r};
    }
    case Kind::Bump:
      return {mu_, radius_};
    case Kind::Linear:
      return {Vector::Zero(dim_), std::numeric_limits<double>::infinity()};
    case Kind::Indicator: {
      BoundingBox bb = region_->bbox();
      Vector c = 0.5 * (bb.lo + bb.hi);
      return {c, 0.5 * (bb.hi - bb.lo).norm()};
    }
    case Kind::Sum: {
      FieldSupport s = terms_[0].second.effective_support(rel_cut);
      Vector lo = s.center.array() - s.radius;
      Vector hi = s.center.array() + s.radius;
      for (size_t i = 1; i < terms_.size(); ++i) {
        FieldSupport si = terms_[i].second.effective_support(rel_cut);
        lo = lo.cwiseMin(Vector(si.center.array() - si.radius));
        hi = hi.cwiseMax(Vector(si.center.array() + si.radius));
      }
      Vector c = 0.5 * (lo + hi);
      return {c, 0.5 * (hi - lo).norm()};
    }
  }
  return {Vector::Zero(dim_), 0.0};
}

bool ScalarField::closed_under_semigroup() const {
  switch (kind_) {
    case Kind::Gaussian:
    case Kind::Linear:
      return true;
    case Kind::Sum:
      for (const auto& [w, g] : terms_) {
        (void)w;
        if (!g.closed_under_semigroup()) return false;
      }
      return true;
    default:
      return false;
  }
}

ScalarField ScalarField::propagate(const CovarianceBundle& cb) const {
  switch (kind_) {
    case Kind::Gaussian: {
      // E[f(EX + sqrt(2W)Z)] is gaussian in X: covariance E^{-1}(S+2W)E^{-T},
      // mean E^{-1}mu, amplitude scaled by sqrt(det S / det(S+2W)).
      Matrix S2 = cov_ + 2.0 * cb.gram;
      Matrix Einv = cb.exp_tB.inverse();
      Matrix cov_new = Einv * S2 * Einv.transpose();
      double ld_S2 = logdet_spd(0.5 * (S2 + S2.transpose()));
      double amp_new = amp_ * std::exp(0.5 * (cov_logdet_ - ld_S2));
      return gaussian(Einv * mu_, 0.5 * (cov_new + cov_new.transpose()), amp_new);
    }
    case Kind::Linear: {
      // E[<a, EX + noise> + b] = <E^T a, X> + b.
      return linear(cb.exp_tB.transpose() * mu_, amp_);
    }
    case Kind::Sum: {
      std::vector<std::pair<double, ScalarField>> out;
      out.reserve(terms_.size());
      for (const auto& [w, g] : terms_) out.emplace_back(w, g.propagate(cb));
      return weighted_sum(std::move(out));
    }
    default:
      throw InvalidInput("propagate: field has no closed-form semigroup image");
  }
}

double ScalarField::generator_apply(const OperatorSpec& spec, const Vector& X) const {
  switch (kind_) {
    case Kind::Gaussian: {
      // grad f = -f M d, D^2 f = f (M d d^T M - M), with M the precision.
      Vector d = X - mu_;
      Vector Md = prec_ * d;
      double val = (*this)(X);
      double diffusion = Md.dot(spec.Q * Md) - (spec.Q * prec_).trace();
      double drift = -(spec.B * X).dot(Md);
      return val * (diffusion + drift);
    }
    case Kind::Linear:
      return (spec.B * X).dot(mu_);
    case Kind::Bump: {
      // f = amp (1-u)^k with u = |d|^2/R^2:
      // grad f = -2k/R^2 amp (1-u)^{k-1} d,
      // D^2 f = -2k/R^2 amp [ (1-u)^{k-1} I - (k-1)(1-u)^{k-2} 2 d d^T / R^2 ].
      Vector d = X - mu_;
      double u = d.squaredNorm() / (radius_ * radius_);
      if (u >= 1.0) return 0.0;
      double k = static_cast<double>(power_);
      double base = std::pow(1.0 - u, k - 1.0);
      double c = -2.0 * k / (radius_ * radius_) * amp_;
      double hess_dd = power_ > 1 ? (k - 1.0) * std::pow(1.0 - u, k - 2.0) * 2.0 *
                                        d.dot(spec.Q * d) / (radius_ * radius_)
                                  : 0.0;
      double diffusion = c * (base * spec.Q.trace() - hess_dd);
      double drift = c * base * (spec.B * X).dot(d);
      return diffusion + drift;
    }
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& [w, g] : terms_) s += w * g.generator_apply(spec, X);
      return s;
    }
    default:
      throw InvalidInput("generator_apply: field is not smooth enough");
  }
}

MassSample ScalarField::sample_mass(RandomStream& rs) const {
  switch (kind_) {
    case Kind::Gaussian: {
      Vector z(dim_);
      rs.fill_normal(z);
      MassSample m;
      m.point = mu_ + chol_ * z;
      m.weight = (amp_ >= 0.0 ? 1.0 : -1.0) * gaussian_l1(amp_, dim_, cov_logdet_);
      return m;
    }
    case Kind::Bump: {
      // Uniform proposal over the supporting ball.
      Vector z(dim_);
      rs.fill_normal(z);
      double nrm = z.norm();
      Vector dir = nrm > 0.0 ? Vector(z / nrm) : Vector::Zero(dim_);
      double r = radius_ * std::pow(rs.u01(), 1.0 / dim_);
      MassSample m;
      m.point = mu_ + r * dir;
      double ball_vol = omega_n(dim_) * std::pow(radius_, dim_);
      m.weight = (*this)(m.point) * ball_vol;
      return m;
    }
    case Kind::Indicator: {
      MassSample m;
      m.point = region_->sample_uniform(rs);
      m.weight = region_->measure();
      return m;
    }
    case Kind::Sum: {
      double total = 0.0;
      std::vector<double> mass(terms_.size());
      for (size_t i = 0; i < terms_.size(); ++i) {
        mass[i] = std::abs(terms_[i].first) * terms_[i].second.lp_mass_bound(1);
        total += mass[i];
      }
      if (!(total > 0.0)) throw InvalidInput("sample_mass: zero-mass sum field");
      double u = rs.u01() * total;
      size_t pick = terms_.size() - 1;
      double acc = 0.0;
      for (size_t i = 0; i < terms_.size(); ++i) {
        acc += mass[i];
        if (u <= acc) {
          pick = i;
          break;
        }
      }
      // weight = w_k m_k / pi_k with pi_k = mass_k / total.
      MassSample m = terms_[pick].second.sample_mass(rs);
      m.weight *= terms_[pick].first * total / mass[pick];
      return m;
    }
    default:
      throw InvalidInput("sample_mass: field is not integrable");
  }
}

std::string ScalarField::describe() const {
  switch (kind_) {
    case Kind::Gaussian:
      return "gaussian";
    case Kind::Bump:
      return "bump";
    case Kind::Linear:
      return "linear";
    case Kind::Indicator:
      return "indicator[" + region_->describe() + "]";
    case Kind::Sum:
      return "sum(" + std::to_string(terms_.size()) + ")";
  }
  return "?";
}

const Vector& ScalarField::gaussian_mean() const {
  if (kind_ != Kind::Gaussian) throw InvalidInput("not a gaussian field");
  return mu_;
}

const Matrix& ScalarField::gaussian_cov() const {
  if (kind_ != Kind::Gaussian) throw InvalidInput("not a gaussian field");
  return cov_;
}

}  // namespace kfp
