#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wsl3d/cloud.hpp"

namespace wsl3d {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Ascending by (squared_distance, index); no duplicate indices.
using NeighborList = std::vector<Neighbor>;

/// Records the pruning decisions of one knn query. Only filled when a trace
/// pointer is passed to Octree::knn.
struct SearchTrace {
  struct Skipped {
    Vec3 center;
    double half_extent = 0.0;
    double squared_radius = 0.0;  // query ball radius when the octant was skipped
  };
  /// Squared query-ball radius after every change; non-increasing.
  std::vector<double> squared_radii;
  /// Octants skipped because they do not overlap the query ball.
  std::vector<Skipped> skipped;
  /// Octants whose whole subtree was compared without descending.
  std::size_t bulk_octants = 0;
  /// Octant in which the search stopped because it contained the query ball.
  std::vector<Skipped> early_stops;
  std::size_t distance_evaluations = 0;
};

/// Point octree over a copy of the cloud positions. Leaves hold at most
/// `leaf_capacity` points unless the cube half-extent drops below
/// `kMinHalfExtent`, in which case the remaining (duplicate) points share one
/// leaf. Immutable after construction; concurrent queries are safe.
class Octree {
 public:
  static constexpr std::size_t kDefaultLeafCapacity = 32;
  static constexpr double kMinHalfExtent = 1e-4;
  static constexpr double kBoundsPadding = 1e-6;

  struct Octant {
    Vec3 center = Vec3::Zero();
    double half_extent = 0.0;
    /// Range into the leaf-ordered point arrays covering the whole subtree.
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::array<std::int32_t, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
    bool leaf = true;
    std::uint32_t depth = 0;
  };

  Octree(std::span<const Vec3> points, std::size_t leaf_capacity = kDefaultLeafCapacity);

  /// The k nearest points, ties broken by lower index. Throws
  /// std::invalid_argument when k is 0 or exceeds the point count.
  [[nodiscard]] NeighborList knn(const Vec3& query, std::size_t k,
                                 SearchTrace* trace = nullptr) const;

  /// All points within `radius` (inclusive), ascending.
  [[nodiscard]] NeighborList radius_search(const Vec3& query, double radius) const;

  [[nodiscard]] std::size_t size() const noexcept { return positions_.size(); }
  [[nodiscard]] std::size_t leaf_capacity() const noexcept { return leaf_capacity_; }
  [[nodiscard]] const std::vector<Octant>& octants() const noexcept { return octants_; }
  [[nodiscard]] const Octant& root() const { return octants_.front(); }
  [[nodiscard]] std::uint32_t depth() const noexcept { return depth_; }

  /// Original point indices stored under an octant's subtree.
  [[nodiscard]] std::span<const std::size_t> indices(const Octant& octant) const {
    return {order_.data() + octant.begin, octant.end - octant.begin};
  }
  [[nodiscard]] const Vec3& point(std::size_t original_index) const {
    return positions_[rank_[original_index]];
  }

 private:
  std::int32_t build(const Vec3& center, double half_extent, std::uint32_t begin,
                     std::uint32_t end, std::uint32_t depth);

  class Candidates;
  bool knn_recurse(std::int32_t node, const Vec3& query, Candidates& best,
                   SearchTrace* trace) const;
  void radius_recurse(std::int32_t node, const Vec3& query, double squared_radius,
                      NeighborList& out) const;

  std::vector<Vec3> positions_;      // leaf order
  std::vector<std::size_t> order_;   // leaf order -> original index
  std::vector<std::size_t> rank_;    // original index -> leaf order
  std::vector<Octant> octants_;
  std::size_t leaf_capacity_;
  std::uint32_t depth_ = 0;
};

/// Throws InputError on an empty cloud or std::invalid_argument on a zero
/// leaf capacity.
Octree build_octree(const PointCloud& cloud,
                    std::size_t leaf_capacity = Octree::kDefaultLeafCapacity);

/// Reference implementations used as test oracles and benchmark baselines.
NeighborList brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k);
NeighborList brute_force_radius(std::span<const Vec3> points, const Vec3& query, double radius);

/// Squared distance from a point to an axis-aligned cube (0 when inside).
double squared_distance_to_cube(const Vec3& query, const Vec3& center, double half_extent);

struct SpeedupReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t queries = 0;
  double build_ms = 0.0;
  double octree_ms = 0.0;
  double brute_ms = 0.0;
  /// brute_ms / octree_ms
  double ratio = 0.0;
  /// Every octree answer equals the brute-force answer.
  bool verified = false;
};

/// Times `queries` knn queries drawn uniformly from the cloud's bounding box
/// against the octree and against brute force.
SpeedupReport bench_knn(const PointCloud& cloud, std::size_t k, std::size_t queries,
                        std::uint64_t seed = 42,
                        std::size_t leaf_capacity = Octree::kDefaultLeafCapacity);

/// Uniform random cloud in the unit cube.
PointCloud random_cloud(std::size_t n, std::uint64_t seed);

}  // namespace wsl3d
