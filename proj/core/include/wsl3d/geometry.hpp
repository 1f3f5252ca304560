#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "wsl3d/cloud.hpp"
#include "wsl3d/octree.hpp"

namespace wsl3d {

enum class CurvatureMode {
  /// lambda0 / (lambda0 + lambda1 + lambda2), dimensionless.
  SurfaceVariation,
  /// Surface variation divided by the mean neighbor distance, in 1/m.
  RadiusNormalized,
};

CurvatureMode parse_curvature_mode(const std::string& name);
std::string to_string(CurvatureMode mode);

/// Per-point normals and curvatures. Degenerate points (fewer than three
/// distinct neighbor positions) carry a zero normal and +inf curvature.
struct LocalGeometry {
  static constexpr double kDegenerateCurvature = std::numeric_limits<double>::infinity();

  std::vector<Vec3> normals;
  std::vector<double> curvatures;
  CurvatureMode curvature_mode = CurvatureMode::RadiusNormalized;
  std::size_t k_used = 0;

  [[nodiscard]] std::size_t size() const noexcept { return normals.size(); }
  [[nodiscard]] bool degenerate(std::size_t i) const { return normals[i].isZero(0.0); }
};

struct PointGeometry {
  Vec3 normal = Vec3::Zero();
  double surface_variation = LocalGeometry::kDegenerateCurvature;
  double mean_distance = 0.0;
  bool degenerate = true;
};

/// PCA over one neighborhood; `center` is the point the neighborhood belongs
/// to and is only used for the mean neighbor distance.
PointGeometry fit_neighborhood(const std::vector<Vec3>& neighborhood, const Vec3& center);

/// Normal and curvature for every point from its k nearest neighbors (the
/// point itself included). Output is identical for any `threads` value.
LocalGeometry estimate_geometry(const PointCloud& cloud, const Octree& tree, std::size_t k,
                                CurvatureMode mode = CurvatureMode::RadiusNormalized,
                                std::size_t threads = 1);

/// Angle between two sign-ambiguous normals folded into [0, 90] degrees.
/// Throws std::invalid_argument on a zero vector.
double normal_angle(const Vec3& n1, const Vec3& n2);

}  // namespace wsl3d
