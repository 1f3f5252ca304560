#pragma once

#include <span>

#include "wsl3d/cloud.hpp"

namespace wsl3d {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  static Aabb of_point(const Vec3& p) { return {p, p}; }

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& other) {
    min = min.cwiseMin(other.min);
    max = max.cwiseMax(other.max);
  }
  [[nodiscard]] Aabb inflated(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }
  [[nodiscard]] Vec3 extent() const { return max - min; }
  [[nodiscard]] double diagonal() const { return extent().norm(); }
  [[nodiscard]] double volume() const { return extent().prod(); }
  [[nodiscard]] bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  friend bool operator==(const Aabb& a, const Aabb& b) { return a.min == b.min && a.max == b.max; }
};

/// Tight box around the given points. Requires at least one index.
Aabb bounding_box(std::span<const Vec3> points);

/// Intersection volume over union volume. When the union has zero volume the
/// result is 1 for identical boxes and 0 otherwise.
double aabb_iou(const Aabb& a, const Aabb& b);

}  // namespace wsl3d
