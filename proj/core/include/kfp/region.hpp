#pragma once

#include <memory>
#include <string>
#include <vector>

#include "kfp/matlin.hpp"
#include "kfp/rng.hpp"

namespace kfp {

struct BoundingBox {
  Vector lo, hi;
};

// Measurable test sets with exact Lebesgue measure, membership predicate and
// an exact uniform sampler. These are the E's the heat-content machinery is
// run against.
class Region {
 public:
  virtual ~Region() = default;
  virtual int dim() const = 0;
  virtual double measure() const = 0;
  virtual bool contains(const Vector& X) const = 0;
  virtual Vector sample_uniform(RandomStream& rs) const = 0;
  virtual BoundingBox bbox() const = 0;
  virtual std::string describe() const = 0;
};

using RegionPtr = std::shared_ptr<const Region>;

RegionPtr make_ball(const Vector& center, double radius);
RegionPtr make_box(const Vector& lo, const Vector& hi);
// {X : (X-c)^T A (X-c) <= 1} with A symmetric positive definite.
RegionPtr make_ellipsoid(const Vector& center, const Matrix& A);
// Parts must be pairwise disjoint; ball/ball and box/box pairs are checked
// exactly, other pairs by a bounding-box screen plus sampling.
RegionPtr make_union(const std::vector<RegionPtr>& parts);

// Image of a ball under the anisotropic scaling (v, x) -> (l v, l^3 x)
// acting blockwise on a kinetic-chain phase space (first half velocities,
// second half positions). Realized exactly as an ellipsoid.
RegionPtr dilate_kinetic(const Vector& center, double radius, double lambda);

// Isotropic dilation of a ball.
RegionPtr dilate_ball(const Vector& center, double radius, double lambda);

}  // namespace kfp
