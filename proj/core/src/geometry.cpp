#include "wsl3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace wsl3d {
namespace {

// Largest-magnitude component positive; ties resolved by the first axis.
Vec3 canonical_sign(Vec3 n) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) > std::abs(n[axis])) axis = i;
  }
  return n[axis] < 0.0 ? Vec3(-n) : n;
}

bool lexicographically_less(const Vec3& a, const Vec3& b) {
  for (int i = 0; i < 3; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

std::size_t count_distinct(const std::vector<Vec3>& pts, std::size_t stop_at) {
  std::vector<const Vec3*> seen;
  for (const auto& p : pts) {
    bool dup = false;
    for (const Vec3* s : seen) {
      if (*s == p) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      seen.push_back(&p);
      if (seen.size() >= stop_at) break;
    }
  }
  return seen.size();
}

}  // namespace

CurvatureMode parse_curvature_mode(const std::string& name) {
  if (name == "surface-variation") return CurvatureMode::SurfaceVariation;
  if (name == "radius-normalized") return CurvatureMode::RadiusNormalized;
  throw InputError(fmt::format("unknown curvature mode '{}'", name));
}

std::string to_string(CurvatureMode mode) {
  return mode == CurvatureMode::SurfaceVariation ? "surface-variation" : "radius-normalized";
}

PointGeometry fit_neighborhood(const std::vector<Vec3>& neighborhood, const Vec3& center) {
  PointGeometry out;
  if (count_distinct(neighborhood, 3) < 3) return out;

  Vec3 mean = Vec3::Zero();
  for (const auto& p : neighborhood) mean += p;
  mean /= static_cast<double>(neighborhood.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : neighborhood) {
    const Vec3 d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(neighborhood.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Vec3 lambda = solver.eigenvalues().cwiseMax(0.0);  // ascending
  const double trace = lambda.sum();
  if (!(trace > 0.0)) return out;

  Vec3 normal = canonical_sign(solver.eigenvectors().col(0).normalized());
  if (lambda[1] - lambda[0] <= 1e-12 * trace) {
    // Planar normal undefined; pick a reproducible eigenvector.
    const Vec3 other = canonical_sign(solver.eigenvectors().col(1).normalized());
    if (lexicographically_less(other, normal)) normal = other;
  }

  double total = 0.0;
  std::size_t count = 0;
  for (const auto& p : neighborhood) {
    const double d = (p - center).norm();
    if (d > 0.0) {
      total += d;
      ++count;
    }
  }
  out.normal = normal;
  out.surface_variation = lambda[0] / trace;
  out.mean_distance = count > 0 ? total / static_cast<double>(count) : 0.0;
  out.degenerate = false;
  return out;
}

LocalGeometry estimate_geometry(const PointCloud& cloud, const Octree& tree, std::size_t k,
                                CurvatureMode mode, std::size_t threads) {
  if (k < 3) throw std::invalid_argument(fmt::format("geometry k must be >= 3, got {}", k));
  if (tree.size() != cloud.size()) {
    throw std::invalid_argument("octree and cloud sizes differ");
  }
  const std::size_t n = cloud.size();
  const std::size_t k_eff = std::min(k, n);
  LocalGeometry geom;
  geom.curvature_mode = mode;
  geom.k_used = k_eff;
  geom.normals.assign(n, Vec3::Zero());
  geom.curvatures.assign(n, LocalGeometry::kDegenerateCurvature);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<Vec3> hood;
    hood.reserve(k_eff);
    for (std::size_t i = begin; i < end; ++i) {
      hood.clear();
      for (const auto& nb : tree.knn(cloud.points[i], k_eff)) hood.push_back(cloud.points[nb.index]);
      const PointGeometry g = fit_neighborhood(hood, cloud.points[i]);
      if (g.degenerate) continue;
      geom.normals[i] = g.normal;
      if (mode == CurvatureMode::SurfaceVariation) {
        geom.curvatures[i] = g.surface_variation;
      } else {
        geom.curvatures[i] = g.mean_distance > 0.0 ? g.surface_variation / g.mean_distance
                                                   : LocalGeometry::kDegenerateCurvature;
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n / 1024 + 1));
  if (workers == 1) {
    work(0, n);
    return geom;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  return geom;
}

double normal_angle(const Vec3& n1, const Vec3& n2) {
  const double l1 = n1.norm();
  const double l2 = n2.norm();
  if (l1 == 0.0 || l2 == 0.0) throw std::invalid_argument("normal_angle: zero normal");
  const double c = std::clamp(n1.dot(n2) / (l1 * l2), -1.0, 1.0);
  const double phi = std::acos(c) * 180.0 / M_PI;
  return std::min(phi, 180.0 - phi);
}

}  // namespace wsl3d
