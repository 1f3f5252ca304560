#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "wsl3d/expansion.hpp"
#include "wsl3d/geometry.hpp"
#include "wsl3d/merge.hpp"
#include "wsl3d/octree.hpp"
#include "wsl3d/synthetic.hpp"

using namespace wsl3d;

namespace {

std::vector<Vec3> queries(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> q(n);
  for (auto& p : q) p = Vec3(u(rng), u(rng), u(rng));
  return q;
}

void BM_OctreeBuild(benchmark::State& state) {
  const auto cloud = random_cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    Octree tree(cloud.points);
    benchmark::DoNotOptimize(tree.depth());
  }
}
BENCHMARK(BM_OctreeBuild)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_OctreeKnn(benchmark::State& state) {
  const auto cloud = random_cloud(static_cast<std::size_t>(state.range(0)), 2);
  const Octree tree(cloud.points);
  const auto q = queries(256, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn(q[i++ % q.size()], static_cast<std::size_t>(state.range(1))));
  }
}
BENCHMARK(BM_OctreeKnn)->Args({10000, 16})->Args({100000, 1})->Args({100000, 16});

void BM_BruteKnn(benchmark::State& state) {
  const auto cloud = random_cloud(static_cast<std::size_t>(state.range(0)), 2);
  const auto q = queries(256, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        brute_force_knn(cloud.points, q[i++ % q.size()], static_cast<std::size_t>(state.range(1))));
  }
}
BENCHMARK(BM_BruteKnn)->Args({10000, 16})->Args({100000, 16});

void BM_Geometry(benchmark::State& state) {
  const auto scene = perpendicular_planes(static_cast<std::size_t>(state.range(0)));
  const Octree tree(scene.cloud.points);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_geometry(scene.cloud, tree, 16));
  }
}
BENCHMARK(BM_Geometry)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Expansion(benchmark::State& state) {
  const auto scene = perpendicular_planes(static_cast<std::size_t>(state.range(0)));
  const Octree tree(scene.cloud.points);
  const auto geom = estimate_geometry(scene.cloud, tree, 16);
  const ExpansionConfig cfg;
  const auto seeds = select_seeds(geom, scene.weak, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(expand_regions(scene.cloud, tree, geom, seeds, cfg));
  }
}
BENCHMARK(BM_Expansion)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Merge(benchmark::State& state) {
  const auto scene = synthetic_room(0.05);
  const Octree tree(scene.cloud.points);
  const auto geom = estimate_geometry(scene.cloud, tree, 16);
  const ExpansionConfig ecfg;
  const auto seeds = select_seeds(geom, scene.weak, ecfg);
  const auto expanded = expand_regions(scene.cloud, tree, geom, seeds, ecfg);
  const OracleProvider oracle(scene.gt_semantic, scene.num_classes);
  const MergeConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_merging(expanded.labels, scene.cloud, scene.weak, oracle, cfg));
  }
}
BENCHMARK(BM_Merge)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
