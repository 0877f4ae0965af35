#include "kfp/region.hpp"

#include <cmath>

#include "kfp/operator_model.hpp"

namespace kfp {

namespace {

// Uniform point in the unit ball: normalized Gaussian direction scaled by
// U^{1/n}.
Vector unit_ball_point(int n, RandomStream& rs) {
  Vector z(n);
  rs.fill_normal(z);
  double r = z.norm();
  if (r == 0.0) return Vector::Zero(n);
  double u = rs.u01();
  return z * (std::pow(u, 1.0 / n) / r);
}

class Ball final : public Region {
 public:
  Ball(Vector c, double r) : c_(std::move(c)), r_(r) {
    if (!(r > 0.0) || !c_.allFinite()) throw InvalidInput("ball: bad parameters");
  }
  int dim() const override { return static_cast<int>(c_.size()); }
  double measure() const override { return omega_n(dim()) * std::pow(r_, dim()); }
  bool contains(const Vector& X) const override { return (X - c_).norm() <= r_; }
  Vector sample_uniform(RandomStream& rs) const override {
    return c_ + r_ * unit_ball_point(dim(), rs);
  }
  BoundingBox bbox() const override {
    return {c_.array() - r_, c_.array() + r_};
  }
  std::string describe() const override {
    return "ball(r=" + std::to_string(r_) + ")";
  }
  const Vector& center() const { return c_; }
  double radius() const { return r_; }

 private:
  Vector c_;
  double r_;
};

class Box final : public Region {
 public:
  Box(Vector lo, Vector hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || !lo_.allFinite() || !hi_.allFinite())
      throw InvalidInput("box: corner dimensions disagree");
    if (((hi_ - lo_).array() <= 0.0).any())
      throw InvalidInput("box: empty side");
  }
  int dim() const override { return static_cast<int>(lo_.size()); }
  double measure() const override { return (hi_ - lo_).prod(); }
  bool contains(const Vector& X) const override {
    return (X.array() >= lo_.array()).all() && (X.array() <= hi_.array()).all();
  }
  Vector sample_uniform(RandomStream& rs) const override {
    Vector X(dim());
    for (int i = 0; i < dim(); ++i)
      X[i] = lo_[i] + (hi_[i] - lo_[i]) * rs.u01();
    return X;
  }
  BoundingBox bbox() const override { return {lo_, hi_}; }
  std::string describe() const override { return "box"; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }

 private:
  Vector lo_, hi_;
};

class Ellipsoid final : public Region {
 public:
  Ellipsoid(Vector c, Matrix A) : c_(std::move(c)), A_(std::move(A)) {
    require_square(A_, "ellipsoid");
    if (A_.rows() != c_.size()) throw InvalidInput("ellipsoid: shape mismatch");
    SymSpectrum sp = sym_spectrum(A_);
    if (sp.min_eig <= 0.0) throw NotPsd("ellipsoid: shape matrix not positive definite");
    // Points are c + A^{-1/2} u with u in the unit ball.
    Vector inv_sqrt = sp.eigenvalues.array().rsqrt();
    to_ambient_ = sp.eigenvectors * inv_sqrt.asDiagonal() * sp.eigenvectors.transpose();
    half_det_ = 0.5 * sp.eigenvalues.array().log().sum();
  }
  int dim() const override { return static_cast<int>(c_.size()); }
  double measure() const override {
    return omega_n(dim()) * std::exp(-half_det_);
  }
  bool contains(const Vector& X) const override {
    Vector d = X - c_;
    return d.dot(A_ * d) <= 1.0;
  }
  Vector sample_uniform(RandomStream& rs) const override {
    return c_ + to_ambient_ * unit_ball_point(dim(), rs);
  }
  BoundingBox bbox() const override {
    // Half-width along axis i is sqrt((A^{-1})_{ii}).
    Vector w = (to_ambient_ * to_ambient_.transpose()).diagonal().cwiseSqrt();
    return {c_ - w, c_ + w};
  }
  std::string describe() const override { return "ellipsoid"; }

 private:
  Vector c_;
  Matrix A_;
  Matrix to_ambient_;
  double half_det_;
};

class DisjointUnion final : public Region {
 public:
  explicit DisjointUnion(std::vector<RegionPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw InvalidInput("union: no parts");
    for (const auto& p : parts_)
      if (p->dim() != parts_[0]->dim())
        throw InvalidInput("union: mixed dimensions");
    check_disjoint();
    total_ = 0.0;
    for (const auto& p : parts_) {
      total_ += p->measure();
      cum_.push_back(total_);
    }
  }
  int dim() const override { return parts_[0]->dim(); }
  double measure() const override { return total_; }
  bool contains(const Vector& X) const override {
    for (const auto& p : parts_)
      if (p->contains(X)) return true;
    return false;
  }
  Vector sample_uniform(RandomStream& rs) const override {
    double u = rs.u01() * total_;
    for (size_t i = 0; i < parts_.size(); ++i)
      if (u <= cum_[i] || i + 1 == parts_.size())
        return parts_[i]->sample_uniform(rs);
    return parts_.back()->sample_uniform(rs);
  }
  BoundingBox bbox() const override {
    BoundingBox bb = parts_[0]->bbox();
    for (size_t i = 1; i < parts_.size(); ++i) {
      BoundingBox b = parts_[i]->bbox();
      bb.lo = bb.lo.cwiseMin(b.lo);
      bb.hi = bb.hi.cwiseMax(b.hi);
    }
    return bb;
  }
  std::string describe() const override {
    return "union(" + std::to_string(parts_.size()) + " parts)";
  }

 private:
  static bool boxes_overlap(const BoundingBox& a, const BoundingBox& b) {
    return (a.lo.array() <= b.hi.array()).all() &&
           (b.lo.array() <= a.hi.array()).all();
  }

  void check_disjoint() const {
    for (size_t i = 0; i < parts_.size(); ++i)
      for (size_t j = i + 1; j < parts_.size(); ++j) {
        const Region* a = parts_[i].get();
        const Region* b = parts_[j].get();
        if (auto* ba = dynamic_cast<const Ball*>(a))
          if (auto* bb = dynamic_cast<const Ball*>(b)) {
            if ((ba->center() - bb->center()).norm() < ba->radius() + bb->radius())
              throw InvalidInput("union: balls overlap");
            continue;
          }
        if (auto* xa = dynamic_cast<const Box*>(a))
          if (auto* xb = dynamic_cast<const Box*>(b)) {
            if (((xa->lo().array() < xb->hi().array()) &&
                 (xb->lo().array() < xa->hi().array()))
                    .all())
              throw InvalidInput("union: boxes overlap");
            continue;
          }
        if (!boxes_overlap(a->bbox(), b->bbox())) continue;
        // Fall back to a sampling screen for mixed shapes.
        RandomStream rs(0x5eedu, 97, i * 1315423911u + j);
        for (int k = 0; k < 4096; ++k)
          if (b->contains(a->sample_uniform(rs)))
            throw InvalidInput("union: parts overlap (sampling check)");
      }
  }

  std::vector<RegionPtr> parts_;
  std::vector<double> cum_;
  double total_ = 0.0;
};

}  // namespace

RegionPtr make_ball(const Vector& center, double radius) {
  return std::make_shared<Ball>(center, radius);
}

RegionPtr make_box(const Vector& lo, const Vector& hi) {
  return std::make_shared<Box>(lo, hi);
}

RegionPtr make_ellipsoid(const Vector& center, const Matrix& A) {
  return std::make_shared<Ellipsoid>(center, A);
}

RegionPtr make_union(const std::vector<RegionPtr>& parts) {
  return std::make_shared<DisjointUnion>(parts);
}

RegionPtr dilate_kinetic(const Vector& center, double radius, double lambda) {
  int N = static_cast<int>(center.size());
  if (N % 2 != 0) throw InvalidInput("dilate_kinetic: dimension must be even");
  if (!(lambda > 0.0)) throw InvalidInput("dilate_kinetic: lambda must be positive");
  int n = N / 2;
  // Ball {|X - c| <= r} maps to {sum (v_i/l)^2 + (x_i/l^3)^2 <= r^2}.
  Vector diag(N);
  for (int i = 0; i < n; ++i) diag[i] = 1.0 / (radius * radius * std::pow(lambda, 2));
  for (int i = n; i < N; ++i) diag[i] = 1.0 / (radius * radius * std::pow(lambda, 6));
  Vector c(N);
  for (int i = 0; i < n; ++i) c[i] = lambda * center[i];
  for (int i = n; i < N; ++i) c[i] = std::pow(lambda, 3) * center[i];
  return make_ellipsoid(c, Matrix(diag.asDiagonal()));
}

RegionPtr dilate_ball(const Vector& center, double radius, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("dilate_ball: lambda must be positive");
  return make_ball(lambda * center, lambda * radius);
}

}  // namespace kfp
