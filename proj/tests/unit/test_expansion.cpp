#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "wsl3d/expansion.hpp"
#include "wsl3d/synthetic.hpp"

using namespace wsl3d;

namespace {

struct Setup {
  PointCloud cloud;
  Octree tree;
  LocalGeometry geometry;

  explicit Setup(PointCloud c, std::size_t k = 16)
      : cloud(std::move(c)), tree(cloud.points), geometry(estimate_geometry(cloud, tree, k)) {}
};

PointCloud grid_plane(int nx, int ny, double spacing, double z, double x0 = 0.0) {
  PointCloud c;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) c.points.emplace_back(x0 + i * spacing, j * spacing, z);
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  ExpansionConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma_deg = 90;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.sigma = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.seed_fraction = 1.5;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.k_expand = 0;
  CHECK_THROWS_AS(c.validate(), InputError);
}

TEST_CASE("seed count: 20 true labels plus 2 per mille of 1000 points") {
  LocalGeometry g;
  g.normals.assign(1000, Vec3(0, 0, 1));
  for (int i = 0; i < 1000; ++i) g.curvatures.push_back(1000.0 - i);  // lowest at the end
  WeakLabels w;
  w.num_classes = 4;
  for (std::size_t i = 0; i < 20; ++i) w.entries.push_back({i * 10, 1});
  const SeedSet s = select_seeds(g, w, ExpansionConfig{});
  REQUIRE(s.size() == 22);
  for (int i = 0; i < 20; ++i) CHECK(s.seeds[i].origin == SeedOrigin::TrueLabel);
  CHECK(s.seeds[20].point == 999);
  CHECK(s.seeds[21].point == 998);
  CHECK(s.seeds[21].origin == SeedOrigin::LowCurvature);
}

TEST_CASE("a true label among the lowest curvatures appears once") {
  LocalGeometry g;
  g.normals.assign(1000, Vec3(0, 0, 1));
  g.curvatures.assign(1000, 1.0);
  g.curvatures[7] = 0.0;
  g.curvatures[8] = 0.5;
  WeakLabels w;
  w.num_classes = 2;
  w.entries = {{7, 0}};
  const SeedSet s = select_seeds(g, w, ExpansionConfig{});
  std::set<std::size_t> unique;
  for (const auto& seed : s.seeds) unique.insert(seed.point);
  CHECK(unique.size() == s.size());
  CHECK(s.size() == 2);
  CHECK(s.seeds[0].point == 7);
  CHECK(s.seeds[1].point == 8);
}

TEST_CASE("degenerate points are never auto-selected") {
  LocalGeometry g;
  g.normals.assign(50, Vec3::Zero());
  g.curvatures.assign(50, LocalGeometry::kDegenerateCurvature);
  WeakLabels w;
  w.num_classes = 3;
  w.entries = {{1, 0}, {2, 1}, {3, 2}, {10, 0}, {20, 1}};
  ExpansionConfig c;
  c.seed_fraction = 0.5;
  CHECK(select_seeds(g, w, c).size() == 5);
}

TEST_CASE("single plane with one seed becomes one cluster") {
  Setup s(grid_plane(30, 30, 0.05, 0.0));
  WeakLabels w;
  w.num_classes = 1;
  w.entries = {{0, 0}};
  const auto seeds = select_seeds(s.geometry, w, {});
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  CHECK(r.termination == Termination::AllLabeled);
  CHECK(r.clusters == 1);
  for (int c : r.labels.cluster_id) CHECK(c == 0);
  CHECK(r.labels.provenance[0] == -1);
}

TEST_CASE("parallel planes stay separate") {
  PointCloud c = grid_plane(40, 40, 0.02, 0.0);
  const PointCloud top = grid_plane(40, 40, 0.02, 1.0);
  c.points.insert(c.points.end(), top.points.begin(), top.points.end());
  Setup s(std::move(c));
  WeakLabels w;
  w.num_classes = 2;
  w.entries = {{0, 0}, {1600, 1}};
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, select_seeds(s.geometry, w, {}), {});
  std::map<int, std::set<int>> planes_per_cluster;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    REQUIRE(r.labels.cluster_id[i] >= 0);
    planes_per_cluster[r.labels.cluster_id[i]].insert(i < 1600 ? 0 : 1);
  }
  CHECK(planes_per_cluster.size() == 2);
  for (const auto& [cluster, planes] : planes_per_cluster) CHECK(planes.size() == 1);
}

TEST_CASE("perpendicular planes give two dominant pure clusters") {
  const SyntheticScene scene = perpendicular_planes(20000);
  Setup s(scene.cloud);
  const auto seeds = select_seeds(s.geometry, scene.weak, {});
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  std::map<int, std::map<int, std::size_t>> comp;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) comp[r.labels.cluster_id[i]][scene.gt_instance[i]]++;
  std::vector<std::pair<std::size_t, int>> sizes;
  for (const auto& [c, m] : comp) {
    std::size_t total = 0;
    for (const auto& [g, n] : m) total += n;
    sizes.emplace_back(total, c);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  REQUIRE(sizes.size() >= 2);
  CHECK(static_cast<double>(sizes[0].first + sizes[1].first) >= 0.99 * s.cloud.size());
  for (int top = 0; top < 2; ++top) {
    const auto& m = comp[sizes[top].second];
    std::size_t best = 0;
    for (const auto& [g, n] : m) best = std::max(best, n);
    CHECK(static_cast<double>(best) >= 0.99 * sizes[top].first);
  }
}

TEST_CASE("admission soundness is replayable from provenance") {
  const SyntheticScene scene = synthetic_room(0.05);
  Setup s(scene.cloud);
  const ExpansionConfig cfg;
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, select_seeds(s.geometry, scene.weak, cfg), cfg);
  std::size_t admitted = 0;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    const auto seed = r.labels.provenance[i];
    if (seed < 0) {
      CHECK(std::isnan(r.delta_phi_deg[i]));
      continue;
    }
    ++admitted;
    CHECK(r.labels.cluster_id[i] == r.labels.cluster_id[seed]);
    const double dphi = normal_angle(s.geometry.normals[i], s.geometry.normals[seed]);
    CHECK(dphi <= cfg.gamma_deg);
    CHECK(dphi == doctest::Approx(r.delta_phi_deg[i]).epsilon(1e-5));
    CHECK(std::abs(s.geometry.curvatures[i] - s.geometry.curvatures[seed]) ==
          doctest::Approx(r.delta_r[i]).epsilon(1e-5));
  }
  CHECK(admitted > s.cloud.size() / 2);
}

TEST_CASE("expansion is deterministic") {
  const SyntheticScene scene = synthetic_room(0.06);
  Setup s(scene.cloud);
  const auto seeds = select_seeds(s.geometry, scene.weak, {});
  const auto a = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  const auto b = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  CHECK(a.labels == b.labels);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("unreachable points stay unassigned") {
  PointCloud c = grid_plane(10, 10, 0.05, 0.0);
  const PointCloud far = grid_plane(10, 10, 0.05, 0.0, 100.0);
  c.points.insert(c.points.end(), far.points.begin(), far.points.end());
  Setup s(std::move(c));
  SeedSet seeds;
  seeds.seeds = {{0, SeedOrigin::TrueLabel}};
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  CHECK(r.termination == Termination::SeedsExhausted);
  for (std::size_t i = 0; i < 100; ++i) CHECK(r.labels.cluster_id[i] == 0);
  for (std::size_t i = 100; i < 200; ++i) CHECK(r.labels.cluster_id[i] == -1);
}

TEST_CASE("condition 1 failures open new clusters") {
  // Two perpendicular strips; only one seed, on the first strip.
  const SyntheticScene scene = perpendicular_planes(2000, 0.05);
  Setup s(scene.cloud);
  SeedSet seeds;
  seeds.seeds = {{0, SeedOrigin::TrueLabel}};
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, seeds, {});
  CHECK(r.clusters >= 2);
  std::set<int> second;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    if (scene.gt_instance[i] == 1 && r.labels.cluster_id[i] >= 0) second.insert(r.labels.cluster_id[i]);
  }
  CHECK_FALSE(second.empty());
  CHECK(second.count(0) == 0);
}

TEST_CASE("max iterations is flagged") {
  Setup s(grid_plane(20, 20, 0.05, 0.0));
  SeedSet seeds;
  seeds.seeds = {{0, SeedOrigin::TrueLabel}};
  ExpansionConfig cfg;
  cfg.max_iterations = 3;
  const auto r = expand_regions(s.cloud, s.tree, s.geometry, seeds, cfg);
  CHECK(r.termination == Termination::MaxIterations);
  CHECK(r.iterations == 3);
}

TEST_CASE("attach labels: direct rule, majority and unlabeled clusters") {
  LabelMatrix l(6);
  l.cluster_id = {0, 0, 0, 1, 1, 2};
  WeakLabels w;
  w.num_classes = 8;
  w.entries = {{1, 7}};
  auto r = attach_cluster_labels(l, w);
  CHECK(r.labels.semantic_label == std::vector<int>{7, 7, 7, -1, -1, -1});
  CHECK(r.conflicts.empty());

  LabelMatrix m(4);
  m.cluster_id = {0, 0, 0, 0};
  w.entries = {{0, 3}, {1, 3}, {2, 5}};
  r = attach_cluster_labels(m, w);
  CHECK(r.labels.semantic_label == std::vector<int>{3, 3, 5, 3});
  REQUIRE(r.conflicts.size() == 1);
  CHECK(r.conflicts[0].chosen == 3);
  CHECK(r.conflicts[0].classes == std::vector<int>{3, 3, 5});

  w.entries = {{0, 4}, {1, 2}};
  r = attach_cluster_labels(m, w);
  CHECK(r.labels.semantic_label[3] == 2);  // tie -> lowest class
  CHECK(r.labels.semantic_label[0] == 4);  // true label kept
}

TEST_CASE("provenance json lists admitted points") {
  ExpansionResult r;
  r.labels = LabelMatrix(3);
  r.labels.provenance = {-1, 0, -1};
  r.delta_phi_deg = {NAN, 0.5f, NAN};
  r.delta_r = {NAN, 0.25f, NAN};
  CHECK(provenance_json(r) ==
        "[\n  {\"point\": 1, \"seed\": 0, \"delta_phi_deg\": 0.500000, \"delta_r\": 0.250000}\n]\n");
  r.labels.provenance = {-1, -1, -1};
  CHECK(provenance_json(r) == "[]\n");
}
