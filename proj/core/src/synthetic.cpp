#include "wsl3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

namespace wsl3d {
namespace {

struct Builder {
  SyntheticScene scene;
  std::mt19937_64 rng;
  double jitter;

  Builder(std::uint64_t seed, double jitter_amplitude) : rng(seed), jitter(jitter_amplitude) {}

  double noise() {
    if (jitter <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-jitter, jitter)(rng);
  }

  // Grid over origin + a*u + b*v, a in [0, nu), b in [0, nv). Points for which
  // `keep` returns false are dropped.
  template <typename Keep>
  void rectangle(const Vec3& origin, const Vec3& u, const Vec3& v, const Vec3& normal, int nu,
                 int nv, double spacing, const Vec3& color, int semantic, int instance,
                 Keep keep) {
    for (int a = 0; a < nu; ++a) {
      for (int b = 0; b < nv; ++b) {
        Vec3 p = origin + (a * spacing) * u + (b * spacing) * v;
        if (!keep(p)) continue;
        p += noise() * normal;
        scene.cloud.points.push_back(p);
        scene.cloud.colors.push_back(color);
        scene.gt_semantic.push_back(semantic);
        scene.gt_instance.push_back(instance);
      }
    }
  }
  void rectangle(const Vec3& origin, const Vec3& u, const Vec3& v, const Vec3& normal, int nu,
                 int nv, double spacing, const Vec3& color, int semantic, int instance) {
    rectangle(origin, u, v, normal, nu, nv, spacing, color, semantic, instance,
              [](const Vec3&) { return true; });
  }
};

int cells(double length, double spacing) {
  return static_cast<int>(std::floor(length / spacing + 1e-9)) + 1;
}

}  // namespace

SyntheticScene perpendicular_planes(std::size_t total_points, double spacing,
                                    std::uint64_t seed) {
  // Long strips keep the fold region a small fraction of each plane.
  const std::size_t per_plane = std::max<std::size_t>(total_points / 2, 4);
  const int nw = std::max(2, static_cast<int>(std::lround(std::sqrt(per_plane / 16.0))));
  const int nl = static_cast<int>(per_plane / static_cast<std::size_t>(nw));
  Builder b(seed, spacing * 1e-3);
  const Vec3 x = Vec3::UnitX();
  const Vec3 y = Vec3::UnitY();
  const Vec3 z = Vec3::UnitZ();
  const Vec3 gray(0.6, 0.6, 0.6);
  b.rectangle(Vec3::Zero(), x, y, z, nl, nw, spacing, gray, 0, 0);
  b.rectangle(spacing * z, z, y, x, nl, nw, spacing, gray, 1, 1);
  b.scene.cloud.scene_id = "perpendicular-planes";
  b.scene.num_classes = 2;
  b.scene.weak.num_classes = 2;
  return b.scene;
}

SyntheticScene split_plane_tiles(std::size_t points_per_side, double spacing, double gap) {
  Builder b(0, 0.0);
  const int n = static_cast<int>(points_per_side);
  const double tile = (n - 1) * spacing;
  const Vec3 color(0.3, 0.5, 0.7);
  int id = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Vec3 origin(i * (tile + gap), j * (tile + gap), 0.0);
      b.rectangle(origin, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), n, n, spacing, color, 0,
                  id++);
    }
  }
  b.scene.cloud.scene_id = "split-plane";
  b.scene.num_classes = 1;
  b.scene.weak.num_classes = 1;
  return b.scene;
}

SyntheticScene synthetic_room(double spacing, std::size_t labels_per_object,
                              std::uint64_t seed) {
  constexpr double kWidth = 4.0;
  constexpr double kDepth = 4.0;
  constexpr double kHeight = 2.5;
  Builder b(seed, spacing * 1e-2);
  const Vec3 x = Vec3::UnitX();
  const Vec3 y = Vec3::UnitY();
  const Vec3 z = Vec3::UnitZ();

  struct BoxSpec {
    Vec3 min;
    Vec3 size;
    Vec3 color;
  };
  const BoxSpec boxes[2] = {
      {{1.0, 1.2, 0.0}, {0.8, 0.6, 0.5}, {0.80, 0.20, 0.15}},
      {{2.4, 2.3, 0.0}, {0.6, 0.9, 0.7}, {0.15, 0.30, 0.80}},
  };
  auto under_box = [&](const Vec3& p) {
    for (const auto& bx : boxes) {
      if (p.x() >= bx.min.x() && p.x() <= bx.min.x() + bx.size.x() && p.y() >= bx.min.y() &&
          p.y() <= bx.min.y() + bx.size.y()) {
        return true;
      }
    }
    return false;
  };

  const Vec3 floor_color(0.55, 0.45, 0.30);
  const Vec3 wall_color(0.85, 0.85, 0.80);
  b.rectangle(Vec3::Zero(), x, y, z, cells(kWidth, spacing), cells(kDepth, spacing), spacing,
              floor_color, 1, 0, [&](const Vec3& p) { return !under_box(p); });
  // Walls start one row above the floor so the shared edge belongs to the floor.
  b.rectangle(spacing * z, x, z, y, cells(kWidth, spacing), cells(kHeight - spacing, spacing),
              spacing, wall_color, 0, 1);
  b.rectangle(spacing * (y + z), y, z, x, cells(kDepth - spacing, spacing),
              cells(kHeight - spacing, spacing), spacing, wall_color, 0, 2);

  for (int k = 0; k < 2; ++k) {
    const auto& bx = boxes[k];
    const int cls = 2 + k;
    const int inst = 3 + k;
    const int nx = cells(bx.size.x(), spacing);
    const int ny = cells(bx.size.y(), spacing);
    const int nz = cells(bx.size.z(), spacing);
    const Vec3 top = bx.min + bx.size.z() * z;
    b.rectangle(top, x, y, z, nx, ny, spacing, bx.color, cls, inst);
    // Side faces stop one row below the top so edges are not duplicated.
    const int side_rows = nz - 1;
    b.rectangle(bx.min, x, z, y, nx, side_rows, spacing, bx.color, cls, inst);
    b.rectangle(bx.min + bx.size.y() * y, x, z, y, nx, side_rows, spacing, bx.color, cls, inst);
    b.rectangle(bx.min + spacing * y, y, z, x, ny - 2, side_rows, spacing, bx.color, cls, inst);
    b.rectangle(bx.min + bx.size.x() * x + spacing * y, y, z, x, ny - 2, side_rows, spacing,
                bx.color, cls, inst);
  }

  auto& scene = b.scene;
  scene.cloud.scene_id = "synthetic-room";
  scene.num_classes = 4;
  scene.weak.num_classes = 4;
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < scene.gt_instance.size(); ++i) {
      if (scene.gt_instance[i] == inst) members.push_back(i);
    }
    std::vector<std::size_t> picked;
    std::sample(members.begin(), members.end(), std::back_inserter(picked),
                static_cast<std::ptrdiff_t>(labels_per_object), b.rng);
    for (std::size_t p : picked) scene.weak.entries.push_back({p, scene.gt_semantic[p]});
  }
  std::sort(scene.weak.entries.begin(), scene.weak.entries.end(),
            [](const WeakLabel& a, const WeakLabel& c) { return a.point_index < c.point_index; });
  return scene;
}

LabelMatrix labels_from_instances(const std::vector<int>& instances) {
  LabelMatrix labels(instances.size());
  labels.cluster_id = instances;
  return labels;
}

}  // namespace wsl3d
