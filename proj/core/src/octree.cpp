#include "wsl3d/octree.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace wsl3d {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_distance(const Vec3& a, const Vec3& b) { return (a - b).squaredNorm(); }

// Cube entirely within the ball.
bool ball_contains_cube(const Vec3& query, double squared_radius, const Vec3& center,
                        double half_extent) {
  if (!std::isfinite(squared_radius)) return false;
  const Vec3 far = (query - center).cwiseAbs().array() + half_extent;
  return far.squaredNorm() <= squared_radius;
}

// Ball strictly inside the cube.
bool cube_contains_ball(const Vec3& query, double squared_radius, const Vec3& center,
                        double half_extent) {
  if (!std::isfinite(squared_radius)) return false;
  const double radius = std::sqrt(squared_radius);
  const Vec3 d = (query - center).cwiseAbs();
  return d.x() + radius < half_extent && d.y() + radius < half_extent &&
         d.z() + radius < half_extent;
}

}  // namespace

double squared_distance_to_cube(const Vec3& query, const Vec3& center, double half_extent) {
  const Vec3 d = ((query - center).cwiseAbs().array() - half_extent).cwiseMax(0.0);
  return d.squaredNorm();
}

// Bounded sorted buffer ordered by (squared_distance, index).
class Octree::Candidates {
 public:
  explicit Candidates(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  [[nodiscard]] double squared_radius() const {
    return items_.size() < k_ ? kInf : items_.back().squared_distance;
  }

  // Returns true when the query ball shrank.
  bool offer(std::size_t index, double d2) {
    if (items_.size() == k_) {
      const auto& worst = items_.back();
      if (d2 > worst.squared_distance ||
          (d2 == worst.squared_distance && index >= worst.index)) {
        return false;
      }
    }
    const double before = squared_radius();
    auto pos = std::upper_bound(items_.begin(), items_.end(), Neighbor{index, d2},
                                [](const Neighbor& a, const Neighbor& b) {
                                  return a.squared_distance < b.squared_distance ||
                                         (a.squared_distance == b.squared_distance &&
                                          a.index < b.index);
                                });
    items_.insert(pos, Neighbor{index, d2});
    if (items_.size() > k_) items_.pop_back();
    return squared_radius() != before;
  }

  NeighborList take() && { return std::move(items_); }

 private:
  std::size_t k_;
  NeighborList items_;
};

Octree::Octree(std::span<const Vec3> points, std::size_t leaf_capacity)
    : leaf_capacity_(leaf_capacity) {
  if (points.empty()) throw InputError("cannot build an octree over an empty cloud");
  if (leaf_capacity == 0) throw std::invalid_argument("leaf capacity must be positive");
  if (points.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("octree supports at most 2^32-1 points");
  }
  positions_.assign(points.begin(), points.end());
  order_.resize(points.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;

  Vec3 lo = positions_.front();
  Vec3 hi = positions_.front();
  for (const auto& p : positions_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff() + kBoundsPadding;
  octants_.reserve(2 * points.size() / leaf_capacity + 8);
  build(center, half, 0, static_cast<std::uint32_t>(positions_.size()), 0);

  rank_.resize(order_.size());
  for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
}

std::int32_t Octree::build(const Vec3& center, double half_extent, std::uint32_t begin,
                           std::uint32_t end, std::uint32_t depth) {
  const auto id = static_cast<std::int32_t>(octants_.size());
  octants_.push_back(Octant{center, half_extent, begin, end, {}, true, depth});
  octants_[id].children.fill(-1);
  depth_ = std::max(depth_, depth);

  const std::uint32_t count = end - begin;
  if (count <= leaf_capacity_ || half_extent < kMinHalfExtent) return id;

  // Counting sort of the range by child code.
  std::array<std::uint32_t, 8> counts{};
  std::vector<std::uint8_t> codes(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const Vec3& p = positions_[begin + i];
    const std::uint8_t code = (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) |
                              (p.z() >= center.z() ? 4 : 0);
    codes[i] = code;
    ++counts[code];
  }
  std::array<std::uint32_t, 9> starts{};
  for (int c = 0; c < 8; ++c) starts[c + 1] = starts[c] + counts[c];
  {
    std::vector<Vec3> tmp_pos(count);
    std::vector<std::size_t> tmp_idx(count);
    auto cursor = starts;
    for (std::uint32_t i = 0; i < count; ++i) {
      const std::uint32_t dst = cursor[codes[i]]++;
      tmp_pos[dst] = positions_[begin + i];
      tmp_idx[dst] = order_[begin + i];
    }
    std::copy(tmp_pos.begin(), tmp_pos.end(), positions_.begin() + begin);
    std::copy(tmp_idx.begin(), tmp_idx.end(), order_.begin() + begin);
  }

  octants_[id].leaf = false;
  const double child_half = 0.5 * half_extent;
  for (int c = 0; c < 8; ++c) {
    if (counts[c] == 0) continue;
    const Vec3 child_center(center.x() + ((c & 1) ? child_half : -child_half),
                            center.y() + ((c & 2) ? child_half : -child_half),
                            center.z() + ((c & 4) ? child_half : -child_half));
    const std::int32_t child =
        build(child_center, child_half, begin + starts[c], begin + starts[c + 1], depth + 1);
    octants_[id].children[c] = child;
  }
  return id;
}

NeighborList Octree::knn(const Vec3& query, std::size_t k, SearchTrace* trace) const {
  if (k == 0) throw std::invalid_argument("knn: k must be positive");
  if (k > size()) {
    throw std::invalid_argument(fmt::format("knn: k = {} exceeds point count {}", k, size()));
  }
  Candidates best(k);
  knn_recurse(0, query, best, trace);
  return std::move(best).take();
}

// Returns true once the query ball lies inside the current octant, which
// means no other octant can hold a closer point and the search may stop.
bool Octree::knn_recurse(std::int32_t node, const Vec3& query, Candidates& best,
                         SearchTrace* trace) const {
  const Octant& o = octants_[node];

  auto compare_range = [&](std::uint32_t begin, std::uint32_t end) {
    for (std::uint32_t r = begin; r < end; ++r) {
      if (best.offer(order_[r], squared_distance(positions_[r], query)) && trace) {
        trace->squared_radii.push_back(best.squared_radius());
      }
    }
    if (trace) trace->distance_evaluations += end - begin;
  };

  const bool bulk = !o.leaf && ball_contains_cube(query, best.squared_radius(), o.center,
                                                  o.half_extent);
  if (o.leaf || bulk) {
    if (bulk && trace) ++trace->bulk_octants;
    compare_range(o.begin, o.end);
  } else {
    // Visit children nearest first.
    std::array<std::pair<double, std::int32_t>, 8> order{};
    int n = 0;
    for (std::int32_t child : o.children) {
      if (child < 0) continue;
      const Octant& c = octants_[child];
      order[n++] = {squared_distance_to_cube(query, c.center, c.half_extent), child};
    }
    std::sort(order.begin(), order.begin() + n);
    for (int i = 0; i < n; ++i) {
      const auto [d2, child] = order[i];
      if (d2 > best.squared_radius()) {
        if (trace) {
          const Octant& c = octants_[child];
          trace->skipped.push_back({c.center, c.half_extent, best.squared_radius()});
        }
        continue;
      }
      if (knn_recurse(child, query, best, trace)) return true;
    }
  }
  if (cube_contains_ball(query, best.squared_radius(), o.center, o.half_extent)) {
    if (trace) trace->early_stops.push_back({o.center, o.half_extent, best.squared_radius()});
    return true;
  }
  return false;
}

NeighborList Octree::radius_search(const Vec3& query, double radius) const {
  if (!(radius > 0.0)) throw std::invalid_argument("radius_search: radius must be positive");
  NeighborList out;
  radius_recurse(0, query, radius * radius, out);
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  });
  return out;
}

void Octree::radius_recurse(std::int32_t node, const Vec3& query, double squared_radius,
                            NeighborList& out) const {
  const Octant& o = octants_[node];
  if (squared_distance_to_cube(query, o.center, o.half_extent) > squared_radius) return;
  const bool bulk = ball_contains_cube(query, squared_radius, o.center, o.half_extent);
  if (o.leaf || bulk) {
    for (std::uint32_t r = o.begin; r < o.end; ++r) {
      // Kept in the bulk case too: the cube test and the point distance may
      // round differently at the ball boundary.
      const double d2 = squared_distance(positions_[r], query);
      if (d2 <= squared_radius) out.push_back({order_[r], d2});
    }
    return;
  }
  for (std::int32_t child : o.children) {
    if (child >= 0) radius_recurse(child, query, squared_radius, out);
  }
}

Octree build_octree(const PointCloud& cloud, std::size_t leaf_capacity) {
  if (cloud.empty()) throw InputError("cannot build an octree over an empty cloud");
  return Octree(cloud.points, leaf_capacity);
}

NeighborList brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k) {
  if (k == 0 || k > points.size()) {
    throw std::invalid_argument(
        fmt::format("brute_force_knn: k = {} invalid for {} points", k, points.size()));
  }
  NeighborList best;
  best.reserve(k + 1);
  auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Neighbor cand{i, squared_distance(points[i], query)};
    if (best.size() == k && !less(cand, best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand, less), cand);
    if (best.size() > k) best.pop_back();
  }
  return best;
}

NeighborList brute_force_radius(std::span<const Vec3> points, const Vec3& query, double radius) {
  NeighborList out;
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = squared_distance(points[i], query);
    if (d2 <= r2) out.push_back({i, d2});
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  });
  return out;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud cloud;
  cloud.scene_id = fmt::format("random-{}-{}", n, seed);
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double z = u(rng);
    cloud.points.emplace_back(x, y, z);
  }
  return cloud;
}

SpeedupReport bench_knn(const PointCloud& cloud, std::size_t k, std::size_t queries,
                        std::uint64_t seed, std::size_t leaf_capacity) {
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  SpeedupReport report;
  report.n = cloud.size();
  report.k = k;
  report.queries = queries;

  Vec3 lo = cloud.points.front();
  Vec3 hi = cloud.points.front();
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> query_points;
  query_points.reserve(queries);
  for (std::size_t q = 0; q < queries; ++q) {
    const double a = u(rng);
    const double b = u(rng);
    const double c = u(rng);
    query_points.push_back(lo + (hi - lo).cwiseProduct(Vec3(a, b, c)));
  }

  auto t0 = Clock::now();
  const Octree tree = build_octree(cloud, leaf_capacity);
  report.build_ms = ms_since(t0);

  std::vector<NeighborList> fast(queries);
  t0 = Clock::now();
  for (std::size_t q = 0; q < queries; ++q) fast[q] = tree.knn(query_points[q], k);
  report.octree_ms = ms_since(t0);

  std::vector<NeighborList> slow(queries);
  t0 = Clock::now();
  for (std::size_t q = 0; q < queries; ++q) {
    slow[q] = brute_force_knn(cloud.points, query_points[q], k);
  }
  report.brute_ms = ms_since(t0);

  report.ratio = report.octree_ms > 0.0 ? report.brute_ms / report.octree_ms : kInf;
  report.verified = fast == slow;
  return report;
}

}  // namespace wsl3d
