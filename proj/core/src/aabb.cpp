#include "wsl3d/aabb.hpp"

#include <algorithm>
#include <stdexcept>

namespace wsl3d {

Aabb bounding_box(std::span<const Vec3> points) {
  if (points.empty()) throw std::invalid_argument("bounding_box: no points");
  Aabb box = Aabb::of_point(points.front());
  for (const auto& p : points) box.extend(p);
  return box;
}

double aabb_iou(const Aabb& a, const Aabb& b) {
  const Vec3 lo = a.min.cwiseMax(b.min);
  const Vec3 hi = a.max.cwiseMin(b.max);
  const Vec3 overlap = (hi - lo).cwiseMax(0.0);
  const double inter = overlap.prod();
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return a == b ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace wsl3d
