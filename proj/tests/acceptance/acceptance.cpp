// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "wsl3d/detection.hpp"
#include "wsl3d/expansion.hpp"
#include "wsl3d/losses.hpp"
#include "wsl3d/merge.hpp"
#include "wsl3d/metrics.hpp"
#include "wsl3d/octree.hpp"
#include "wsl3d/pipeline.hpp"
#include "wsl3d/synthetic.hpp"

using namespace wsl3d;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fixture(const std::string& name) { return fs::path(WSL3D_FIXTURE_DIR) / name; }

Outcome octree_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  std::size_t mismatches = 0;
  std::size_t queries = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = c % 2 == 0 ? 1000 : 10000;
    const auto pts = random_cloud(n, 1000 + c).points;
    const Octree tree(pts);
    for (int q = 0; q < 100; ++q) {
      const Vec3 query(u(rng), u(rng), u(rng));
      for (std::size_t k : {1u, 8u, 16u}) {
        const auto got = tree.knn(query, k);
        const auto want = brute_force_knn(pts, query, k);
        std::vector<double> dg;
        std::vector<double> dw;
        for (const auto& x : got) dg.push_back(x.squared_distance);
        for (const auto& x : want) dw.push_back(x.squared_distance);
        std::sort(dg.begin(), dg.end());
        std::sort(dw.begin(), dw.end());
        if (dg != dw) ++mismatches;
        ++queries;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          fmt::format("{} queries, {} mismatches, {:.2f} s", queries, mismatches, secs)};
}

Outcome knn_speedup() {
  const PointCloud cloud = random_cloud(100000, 7);
  const SpeedupReport r = bench_knn(cloud, 16, 1000, 8);
  return {r.verified && r.ratio >= 5.0,
          fmt::format("octree {:.1f} ms, brute {:.1f} ms, ratio {:.1f}x (threshold 5x, reference "
                      "18.2x), verified {}",
                      r.octree_ms, r.brute_ms, r.ratio, r.verified)};
}

Outcome planes_expansion() {
  const auto t0 = Clock::now();
  const SyntheticScene scene = perpendicular_planes(20000);
  ExpansionConfig cfg;
  cfg.gamma_deg = 2.2;
  cfg.sigma = 0.35;
  std::vector<LabelMatrix> runs;
  for (int rep = 0; rep < 3; ++rep) {
    const Octree tree(scene.cloud.points);
    const LocalGeometry geom = estimate_geometry(scene.cloud, tree, 16);
    const SeedSet seeds = select_seeds(geom, scene.weak, cfg);
    runs.push_back(expand_regions(scene.cloud, tree, geom, seeds, cfg).labels);
  }
  const bool deterministic = runs[0] == runs[1] && runs[1] == runs[2];
  std::map<int, std::map<int, std::size_t>> comp;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    comp[runs[0].cluster_id[i]][scene.gt_instance[i]]++;
  }
  std::vector<std::pair<std::size_t, int>> sizes;
  for (const auto& [c, m] : comp) {
    std::size_t total = 0;
    for (const auto& [g, k] : m) total += k;
    sizes.emplace_back(total, c);
  }
  std::sort(sizes.rbegin(), sizes.rend());
  const double n = static_cast<double>(scene.cloud.size());
  const double coverage = sizes.size() >= 2 ? (sizes[0].first + sizes[1].first) / n : 0.0;
  double min_purity = 1.0;
  std::set<int> dominant_planes;
  for (int top = 0; top < std::min<int>(2, static_cast<int>(sizes.size())); ++top) {
    std::size_t best = 0;
    int best_plane = -1;
    for (const auto& [g, k] : comp[sizes[top].second]) {
      if (k > best) {
        best = k;
        best_plane = g;
      }
    }
    dominant_planes.insert(best_plane);
    min_purity = std::min(min_purity, static_cast<double>(best) / sizes[top].first);
  }
  const double secs = seconds_since(t0);
  const bool pass = deterministic && coverage >= 0.99 && min_purity >= 0.99 &&
                    dominant_planes.size() == 2 && secs < 30.0;
  return {pass, fmt::format("{} points, {} clusters total, 2 largest cover {:.2f}%, purity "
                            "{:.2f}%, deterministic {}, {:.2f} s",
                            scene.cloud.size(), sizes.size(), 100 * coverage, 100 * min_purity,
                            deterministic, secs)};
}

Outcome merge_convergence() {
  const SyntheticScene tiles = split_plane_tiles();
  WeakLabels none;
  none.num_classes = 1;
  const auto ds = build_descriptors(labels_from_instances(tiles.gt_instance), tiles.cloud, none,
                                    UniformProvider(1));
  MergeConfig cfg;
  const auto merged = merge_round(ds, {cfg.n_total, 0, cfg.channel}, cfg);
  const bool tiles_ok = ds.size() == 4 && merged.size() == 1;

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_real_distribution<double> e(0.05, 0.8);
  std::uniform_real_distribution<double> c01(0.0, 1.0);
  std::size_t violations = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<ClusterDescriptor> cs;
    const std::size_t count = 2 + rng() % 30;
    std::size_t next = 0;
    for (std::size_t i = 0; i < count; ++i) {
      ClusterDescriptor d;
      d.cluster_id = static_cast<int>(i);
      const std::size_t sz = 1 + rng() % 15;
      for (std::size_t p = 0; p < sz; ++p) d.point_indices.push_back(next++);
      const Vec3 lo(u(rng), u(rng), u(rng));
      d.aabb = {lo, lo + Vec3(e(rng), e(rng), e(rng))};
      d.centroid = (d.aabb.min + d.aabb.max) / 2;
      if (t % 2) d.mean_color = Vec3(c01(rng), c01(rng), c01(rng));
      d.semantic_row = {c01(rng) + 0.01, c01(rng) + 0.01, c01(rng) + 0.01};
      const double s = d.semantic_row[0] + d.semantic_row[1] + d.semantic_row[2];
      for (auto& v : d.semantic_row) v /= s;
      if (rng() % 3 == 0) {
        const int label = static_cast<int>(rng() % 3);
        d.true_label_votes[label] = 1;
        d.dominant_label = label;
      }
      cs.push_back(std::move(d));
    }
    cfg.channel = t % 2 ? SegChannel::Literal : SegChannel::Narrative;
    const auto out = merge_round(cs, {10, rng() % 11, cfg.channel}, cfg);
    std::vector<std::size_t> pts;
    for (const auto& d : out) pts.insert(pts.end(), d.point_indices.begin(), d.point_indices.end());
    std::sort(pts.begin(), pts.end());
    std::vector<std::size_t> expected(next);
    std::iota(expected.begin(), expected.end(), 0);
    if (out.size() > cs.size() || pts != expected) ++violations;
  }
  return {tiles_ok && violations == 0,
          fmt::format("tiles {} -> {} after round 0; {} violations over 1000 random rounds",
                      ds.size(), merged.size(), violations)};
}

Outcome room_quality() {
  const auto t0 = Clock::now();
  const fs::path dir = fixture("room");
  PointCloud cloud = load_cloud(dir / "cloud.ply");
  const WeakLabels weak = load_weak_labels(dir / "weak.txt");
  const std::vector<int> gt = read_semantic_labels(dir / "gt.txt");
  const OracleProvider oracle(gt, weak.num_classes);
  const PipelineResult r = run_pipeline(PipelineConfig{}, cloud, weak, oracle, {}, &gt);
  const double secs = seconds_since(t0);
  const double m = r.report.miou.value_or(0.0);
  return {m >= 0.90 && r.report.true_label_violations == 0 && secs < 120.0,
          fmt::format("{} points, {} weak labels, mIoU {:.4f}, violations {}, clusters {} -> {}, "
                      "{:.2f} s",
                      cloud.size(), weak.size(), m, r.report.true_label_violations,
                      r.report.expansion_clusters, r.report.final_clusters, secs)};
}

Outcome loss_exactness() {
  using namespace wsl3d::loss;
  const double ln2 = std::numbers::ln2;
  std::vector<std::string> failed;
  Matrix p(1, 3);
  p << 0.2, 0.3, 0.5;
  if (!(std::abs(js_divergence(p, p, Mask{1}, 1.0)) <= 1e-12)) failed.push_back("js(p,p)");
  Matrix a(1, 2);
  Matrix b(1, 2);
  a << 1, 0;
  b << 0, 1;
  if (!(std::abs(js_divergence(a, b, Mask{1}, 1.0) - ln2) <= 1e-9)) failed.push_back("js one-hot");
  Matrix half(1, 2);
  half << 0.5, 0.5;
  const std::vector<int> t{0};
  if (!(std::abs(masked_cross_entropy(half, t, Mask{1}, 1.0) - ln2) <= 1e-9)) failed.push_back("ce");
  const std::vector<double> pd{0.5, 0.5};
  const std::vector<double> gd{1, 0};
  if (!(std::abs(dice_loss(pd, gd) - 1.0 / 3.0) <= 1e-9)) failed.push_back("dice");
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 20);
    Matrix enc(n, 5);
    Matrix w1(5, 3);
    Matrix w2(5, 3);
    for (auto* m : {&enc, &w1, &w2})
      for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = 3 * g(rng);
    const auto out = attention_redistribute(enc, w1, w2);
    worst = std::max(worst, (out.scores.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  if (!(worst <= 1e-9)) failed.push_back("attention rows");
  std::string detail = failed.empty() ? "all closed forms hold" : "failed:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), fmt::format("{}; worst attention row-sum error {:.2e}", detail, worst)};
}

Outcome gradient_checks() {
  using namespace wsl3d::loss;
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double h = 1e-5;
  double worst_ce = 0.0;
  double worst_dice = 0.0;
  for (int t = 0; t < 50; ++t) {
    Matrix logits(6, 4);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = g(rng);
    const Matrix pred = softmax_rows(logits);
    std::vector<int> target(6);
    Mask mask(6);
    for (int i = 0; i < 6; ++i) {
      target[i] = static_cast<int>(rng() % 4);
      mask[i] = i == 0 ? 1 : static_cast<std::uint8_t>(rng() % 2);
    }
    Matrix dir(6, 4);
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir.data()[i] = g(rng);
    const double an = directional_derivative(masked_cross_entropy_gradient(pred, target, mask, 6.0), dir);
    const double nu = (masked_cross_entropy(pred + h * dir, target, mask, 6.0) -
                       masked_cross_entropy(pred - h * dir, target, mask, 6.0)) / (2 * h);
    worst_ce = std::max(worst_ce, std::abs(an - nu) / std::max(std::abs(nu), 1e-12));

    const std::size_t n = 3 + rng() % 10;
    std::vector<double> p(n);
    std::vector<double> gt(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(rng);
      gt[i] = static_cast<double>(rng() % 2);
      d[i] = g(rng);
    }
    gt[0] = 1.0;
    const Matrix grad = dice_loss_gradient(p, gt);
    const Matrix dm = Eigen::Map<const Vector>(d.data(), static_cast<Eigen::Index>(n));
    const double ad = directional_derivative(grad, dm);
    std::vector<double> plus(n);
    std::vector<double> minus(n);
    for (std::size_t i = 0; i < n; ++i) {
      plus[i] = p[i] + h * d[i];
      minus[i] = p[i] - h * d[i];
    }
    const double nd = (dice_loss(plus, gt) - dice_loss(minus, gt)) / (2 * h);
    worst_dice = std::max(worst_dice, std::abs(ad - nd) / std::max(std::abs(nd), 1e-12));
  }
  return {worst_ce <= 1e-4 && worst_dice <= 1e-4,
          fmt::format("worst relative error: cross entropy {:.2e}, dice {:.2e}", worst_ce,
                      worst_dice)};
}

Outcome metric_sanity() {
  const std::vector<int> l{0, 1, 2, 1, 0};
  const bool identity = miou(l, l, 3).mean.value_or(0) == 1.0;
  const std::vector<int> pred(10, 0);
  std::vector<int> gt(10, 0);
  std::fill(gt.begin() + 5, gt.end(), 1);
  const double binary = miou(pred, gt, 2).mean.value_or(-1);
  const Box3D a{{Vec3(0, 0, 0), Vec3(1, 1, 1)}, 0, 0, 1};
  const Box3D b{{Vec3(0.5, 0, 0), Vec3(1.5, 1, 1)}, 0, 1, 1};
  const std::vector<Box3D> gts{a, Box3D{{Vec3(3, 3, 3), Vec3(4, 5, 6)}, 1, 2, 1}};
  std::vector<ScoredBox> perfect;
  for (const auto& x : gts) perfect.push_back({x, 1.0});
  const double ap = average_precision(perfect, gts, 0.5).mean.value_or(0);
  const double iou = box_iou(a, b);
  return {identity && binary == 0.25 && ap == 1.0 && std::abs(iou - 1.0 / 3.0) <= 1e-12,
          fmt::format("mIoU(pred=gt) {}, binary mIoU {}, perfect AP {}, shifted cube IoU {:.15f}",
                      identity ? 1.0 : 0.0, binary, ap, iou)};
}

Outcome schedule_endpoints() {
  bool ok = true;
  for (std::size_t n : {1u, 10u, 300u}) {
    const auto s = schedule_weights(0, n);
    const auto e = schedule_weights(n, n);
    ok = ok && s.y1 == 1.0 && s.y2 == 1.0 && s.y3 == 1.0 && s.y4 == 0.0;
    ok = ok && e.y1 == 0.0 && e.y2 == 0.0 && e.y3 == 0.0 && e.y4 == 1.0;
  }
  return {ok, "N in {1, 10, 300}: (1,1,1,0) at m=0 and (0,0,0,1) at m=N"};
}

Outcome run_determinism(const std::string& cli) {
  const fs::path work = fs::temp_directory_path() / fmt::format("wsl3d-acceptance-{}", std::random_device{}());
  fs::create_directories(work);
  const fs::path dir = fixture("room");
  std::vector<int> codes;
  for (const char* run : {"a", "b"}) {
    if (!cli.empty()) {
      const std::string cmd = fmt::format(
          "\"{}\" --seed 42 --config \"{}\" run --cloud \"{}\" --weak-labels \"{}\" --out-dir "
          "\"{}\" --provider oracle:\"{}\" --quiet > \"{}\" 2>&1",
          cli, (fixture("pipeline.cfg")).string(), (dir / "cloud.ply").string(),
          (dir / "weak.txt").string(), (work / run).string(), (dir / "gt.txt").string(),
          (work / (std::string(run) + ".log")).string());
      codes.push_back(std::system(cmd.c_str()));
    } else {
      PipelineConfig cfg = load_pipeline_config(fixture("pipeline.cfg"));
      cfg.provider = "oracle:" + (dir / "gt.txt").string();
      (void)run_pipeline(cfg, dir / "cloud.ply", dir / "weak.txt", work / run);
      codes.push_back(0);
    }
  }
  bool same = true;
  std::string files;
  for (const char* f : {"labels.txt", "labels.ply", "boxes.json", "provenance.json"}) {
    const std::string x = slurp(work / "a" / f);
    const std::string y = slurp(work / "b" / f);
    same = same && !x.empty() && x == y;
    files += fmt::format(" {}={}B", f, x.size());
  }
  const bool ok = same && codes[0] == 0 && codes[1] == 0;
  std::error_code ec;
  fs::remove_all(work, ec);
  return {ok, fmt::format("{} twice, byte-identical {};{}", cli.empty() ? "library run" : "cli run",
                          same, files)};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
#ifdef WSL3D_CLI
  cli = WSL3D_CLI;
#endif
  if (argc > 1) cli = argv[1];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"octree knn equals brute force", octree_oracle},
      {"octree knn speedup at N=1e5", knn_speedup},
      {"region expansion on perpendicular planes", planes_expansion},
      {"merge convergence on split plane", merge_convergence},
      {"synthetic room pseudo-label quality", room_quality},
      {"loss kernel exactness", loss_exactness},
      {"loss gradient checks", gradient_checks},
      {"metric sanity", metric_sanity},
      {"schedule endpoints", schedule_endpoints},
      {"run determinism", [&] { return run_determinism(cli); }},
  };
  int failures = 0;
  int id = 0;
  for (const auto& [name, fn] : criteria) {
    ++id;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    if (!o.pass) ++failures;
    fmt::print("[{}] {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", id - failures, id);
  return failures == 0 ? 0 : 1;
}
