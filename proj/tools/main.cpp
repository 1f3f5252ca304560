// wsl3d command line tool. Exit status: 0 success, 2 input error, 3 stage
// failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wsl3d/detection.hpp"
#include "wsl3d/expansion.hpp"
#include "wsl3d/geometry.hpp"
#include "wsl3d/losses.hpp"
#include "wsl3d/merge.hpp"
#include "wsl3d/metrics.hpp"
#include "wsl3d/octree.hpp"
#include "wsl3d/pipeline.hpp"
#include "wsl3d/synthetic.hpp"

namespace {

using namespace wsl3d;

constexpr int kExitInput = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

// Config file, then explicit flags. Flags only override when given.
PipelineConfig base_config(const Globals& g, std::map<std::string, std::string> overrides) {
  PipelineConfig config = g.config.empty() ? PipelineConfig{} : load_pipeline_config(g.config);
  if (g.seed) overrides["seed"] = std::to_string(*g.seed);
  if (g.threads) overrides["threads"] = std::to_string(*g.threads);
  return apply_overrides(config, overrides);
}

template <typename T>
void put(std::map<std::string, std::string>& m, const char* key, const std::optional<T>& v) {
  if (v) {
    if constexpr (std::is_same_v<T, std::string>) {
      m[key] = *v;
    } else {
      m[key] = fmt::format("{}", *v);
    }
  }
}

struct ClusterArgs {
  std::string cloud, weak, out_labels, out_provenance;
  std::optional<double> gamma, sigma, seed_fraction;
  std::optional<std::size_t> k_expand, geom_k, max_iterations;
  std::optional<std::string> curvature_mode;
};

int cmd_cluster(const Globals& g, const ClusterArgs& a) {
  std::map<std::string, std::string> o;
  put(o, "gamma", a.gamma);
  put(o, "sigma", a.sigma);
  put(o, "seed_fraction", a.seed_fraction);
  put(o, "k_expand", a.k_expand);
  put(o, "geom_k", a.geom_k);
  put(o, "max_iterations", a.max_iterations);
  put(o, "curvature_mode", a.curvature_mode);
  const PipelineConfig cfg = base_config(g, o);

  const PointCloud cloud = load_cloud(a.cloud);
  const WeakLabels weak = load_weak_labels(a.weak);
  weak.check_against(cloud.size());
  const Octree tree(cloud.points, cfg.leaf_capacity);
  const LocalGeometry geom = estimate_geometry(cloud, tree, cfg.geom_k, cfg.curvature_mode,
                                               cfg.threads);
  const SeedSet seeds = select_seeds(geom, weak, cfg.expansion);
  const ExpansionResult ex = expand_regions(cloud, tree, geom, seeds, cfg.expansion);
  const AttachResult attached = attach_cluster_labels(ex.labels, weak);
  write_labeled_cloud(cloud, attached.labels, a.out_labels, LabelOutput::LabelsText);
  if (!a.out_provenance.empty()) write_provenance(ex, a.out_provenance);
  fmt::print("points {} seeds {} clusters {} iterations {} termination {} conflicts {}\n",
             cloud.size(), seeds.size(), ex.clusters, ex.iterations, to_string(ex.termination),
             attached.conflicts.size());
  return 0;
}

struct MergeArgs {
  std::string labels, cloud, weak, out_labels;
  std::optional<std::string> provider, seg_channel;
  std::optional<std::size_t> rounds, k_clusters;
  std::optional<double> cond3, cond4, inflate;
};

int cmd_merge(const Globals& g, const MergeArgs& a) {
  std::map<std::string, std::string> o;
  put(o, "provider", a.provider);
  put(o, "seg_channel", a.seg_channel);
  put(o, "rounds", a.rounds);
  put(o, "k_clusters", a.k_clusters);
  put(o, "cond3", a.cond3);
  put(o, "cond4", a.cond4);
  put(o, "inflate", a.inflate);
  const PipelineConfig cfg = base_config(g, o);

  const PointCloud cloud = load_cloud(a.cloud);
  const LabelMatrix labels = read_labels_text(a.labels);
  if (labels.size() != cloud.size()) {
    throw InputError(fmt::format("{} holds {} labels for {} points", a.labels, labels.size(),
                                 cloud.size()));
  }
  const WeakLabels weak = load_weak_labels(a.weak);
  weak.check_against(cloud.size());
  const auto provider = make_provider(cfg.provider, weak.num_classes);
  const MergeResult merged = run_merging(labels, cloud, weak, *provider, cfg.merge);
  write_labeled_cloud(cloud, merged.labels, a.out_labels, LabelOutput::LabelsText);
  fmt::print("clusters {}", merged.initial_clusters);
  for (const auto& r : merged.rounds) fmt::print(" -> {}", r.clusters_after);
  fmt::print("\n");
  return 0;
}

struct BoxesArgs {
  std::string labels, cloud, out, exclude;
  std::optional<std::size_t> min_points;
};

int cmd_boxes(const Globals& g, const BoxesArgs& a) {
  std::map<std::string, std::string> o;
  put(o, "min_points", a.min_points);
  if (!a.exclude.empty()) o["exclude_classes"] = a.exclude;
  const PipelineConfig cfg = base_config(g, o);
  const PointCloud cloud = load_cloud(a.cloud);
  const LabelMatrix labels = read_labels_text(a.labels);
  if (labels.size() != cloud.size()) {
    throw InputError(fmt::format("{} holds {} labels for {} points", a.labels, labels.size(),
                                 cloud.size()));
  }
  const auto boxes = instance_boxes(labels, cloud, cfg.boxes);
  export_boxes(boxes, a.out);
  fmt::print("boxes {}\n", boxes.size());
  return 0;
}

struct EvalArgs {
  std::string pred_labels, gt_labels, pred_boxes, gt_boxes, csv;
  int classes = 0;
  double iou = 0.5;
  std::string loss, matrix_a, matrix_b;
};

int cmd_eval(const EvalArgs& a) {
  std::string csv = "metric,class,value\n";
  bool did = false;
  auto show = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.6f}", *v) : std::string("undefined");
  };
  if (!a.pred_labels.empty() || !a.gt_labels.empty()) {
    if (a.pred_labels.empty() || a.gt_labels.empty() || a.classes <= 0) {
      throw InputError("segmentation eval needs --pred-labels, --gt-labels and --classes");
    }
    const auto pred = read_semantic_labels(a.pred_labels);
    const auto gt = read_semantic_labels(a.gt_labels);
    if (pred.size() != gt.size()) {
      throw InputError(fmt::format("label counts differ: {} vs {}", pred.size(), gt.size()));
    }
    const IouReport r = miou(pred, gt, a.classes);
    fmt::print("{:<8} {:>10}\n", "class", "iou");
    for (int c = 0; c < a.classes; ++c) {
      fmt::print("{:<8} {:>10}\n", c, show(r.per_class[c]));
      csv += fmt::format("iou,{},{}\n", c, show(r.per_class[c]));
    }
    fmt::print("{:<8} {:>10}\n", "mean", show(r.mean));
    csv += fmt::format("miou,all,{}\n", show(r.mean));
    did = true;
  }
  if (!a.pred_boxes.empty() || !a.gt_boxes.empty()) {
    if (a.pred_boxes.empty() || a.gt_boxes.empty()) {
      throw InputError("detection eval needs --pred-boxes and --gt-boxes");
    }
    const auto pred = load_boxes(a.pred_boxes);
    std::vector<Box3D> gt;
    for (const auto& s : load_boxes(a.gt_boxes)) gt.push_back(s.box);
    const ApReport r = average_precision(pred, gt, a.iou);
    fmt::print("{:<8} {:>10}\n", "class", fmt::format("ap@{:g}", a.iou));
    for (const auto& [c, ap] : r.per_class) {
      fmt::print("{:<8} {:>10.6f}\n", c, ap);
      csv += fmt::format("ap,{},{:.6f}\n", c, ap);
    }
    fmt::print("{:<8} {:>10}\n", "mean", show(r.mean));
    csv += fmt::format("map,all,{}\n", show(r.mean));
    did = true;
  }
  if (!a.loss.empty()) {
    if (a.matrix_a.empty() || a.matrix_b.empty()) {
      throw InputError("--loss needs --matrix-a and --matrix-b");
    }
    const loss::Matrix p = loss::read_matrix(a.matrix_a);
    const loss::Matrix q = loss::read_matrix(a.matrix_b);
    if (p.rows() != q.rows() || p.cols() != q.cols()) {
      throw InputError("matrix shapes differ");
    }
    const loss::Mask all(static_cast<std::size_t>(p.rows()), 1);
    const double rows = static_cast<double>(p.rows());
    double value = 0.0;
    if (a.loss == "ce") {
      value = loss::masked_cross_entropy(p, q, all, rows);
    } else if (a.loss == "js") {
      value = loss::js_divergence(p, q, all, rows);
    } else if (a.loss == "dice") {
      value = loss::dice_loss(std::span<const double>(p.data(), p.size()),
                              std::span<const double>(q.data(), q.size()));
    } else {
      throw InputError(fmt::format("unknown loss '{}'", a.loss));
    }
    fmt::print("{} {:.12g}\n", a.loss, value);
    csv += fmt::format("{},all,{:.12g}\n", a.loss, value);
    did = true;
  }
  if (!did) throw InputError("eval: nothing to evaluate");
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw std::runtime_error(fmt::format("cannot open {}", a.csv));
    out << csv;
  }
  return 0;
}

struct BenchArgs {
  std::size_t n = 100000, k = 16, queries = 1000, leaf = Octree::kDefaultLeafCapacity;
  std::string csv;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
  const std::uint64_t seed = g.seed.value_or(42);
  const PointCloud cloud = random_cloud(a.n, seed);
  const SpeedupReport r = bench_knn(cloud, a.k, a.queries, seed + 1, a.leaf);
  fmt::print("n {} k {} queries {} build_ms {:.3f} octree_ms {:.3f} brute_ms {:.3f} ratio {:.2f} "
             "verified {}\n",
             r.n, r.k, r.queries, r.build_ms, r.octree_ms, r.brute_ms, r.ratio, r.verified);
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw std::runtime_error(fmt::format("cannot open {}", a.csv));
    out << "n,k,octree_ms,brute_ms,ratio,verified\n";
    out << fmt::format("{},{},{:.3f},{:.3f},{:.3f},{}\n", r.n, r.k, r.octree_ms, r.brute_ms,
                       r.ratio, r.verified ? 1 : 0);
  }
  return r.verified ? 0 : kExitStage;
}

struct RunArgs {
  std::string cloud, weak, out_dir;
  std::vector<std::string> sets;
  std::optional<std::string> provider, gt_labels;
  bool quiet = false;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  std::map<std::string, std::string> o;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InputError(fmt::format("--set expects key=value: {}", s));
    o[s.substr(0, eq)] = s.substr(eq + 1);
  }
  put(o, "provider", a.provider);
  put(o, "gt_labels", a.gt_labels);
  const PipelineConfig cfg = base_config(g, o);
  const RunReport r = run_pipeline(cfg, a.cloud, a.weak, a.out_dir, a.quiet ? nullptr : &std::cerr);
  fmt::print("points {} final_clusters {} coverage {:.4f} boxes {}", r.points, r.final_clusters,
             r.coverage_final, r.boxes);
  if (r.miou) fmt::print(" miou {:.4f}", *r.miou);
  fmt::print("\n");
  return 0;
}

struct SynthArgs {
  std::string scene = "room";
  std::string out_dir;
  std::size_t points = 20000;
  double spacing = 0.0;
  std::size_t per_object = 4;
};

int cmd_synth(const Globals& g, const SynthArgs& a) {
  SyntheticScene s;
  const std::uint64_t seed = g.seed.value_or(11);
  if (a.scene == "room") {
    s = synthetic_room(a.spacing > 0 ? a.spacing : 0.028, a.per_object, seed);
  } else if (a.scene == "planes") {
    s = perpendicular_planes(a.points, a.spacing > 0 ? a.spacing : 0.02, seed);
  } else if (a.scene == "tiles") {
    s = split_plane_tiles();
  } else {
    throw InputError(fmt::format("unknown scene '{}'", a.scene));
  }
  const std::filesystem::path dir = a.out_dir;
  std::filesystem::create_directories(dir);
  save_cloud(s.cloud, dir / "cloud.ply", CloudFormat::PlyBinaryLE);
  if (!s.weak.empty()) save_weak_labels(s.weak, dir / "weak.txt");
  LabelMatrix gt(s.cloud.size());
  gt.cluster_id = s.gt_instance;
  gt.semantic_label = s.gt_semantic;
  write_labeled_cloud(s.cloud, gt, dir / "gt.txt", LabelOutput::LabelsText);
  fmt::print("{} points, {} weak labels, {} classes -> {}\n", s.cloud.size(), s.weak.size(),
             s.num_classes, dir.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pseudo labels and pseudo boxes for point clouds from sparse weak labels"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key=value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Global seed");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);

  ClusterArgs ca;
  auto* cluster = app.add_subcommand("cluster", "Seed selection and region expansion");
  cluster->add_option("--cloud", ca.cloud)->required();
  cluster->add_option("--weak-labels", ca.weak)->required();
  cluster->add_option("--gamma", ca.gamma, "Normal angle threshold, degrees");
  cluster->add_option("--sigma", ca.sigma, "Curvature difference threshold");
  cluster->add_option("--seed-fraction", ca.seed_fraction);
  cluster->add_option("--k-expand", ca.k_expand);
  cluster->add_option("--geom-k", ca.geom_k, "Neighbors for normal estimation");
  cluster->add_option("--curvature-mode", ca.curvature_mode,
                      "surface-variation or radius-normalized");
  cluster->add_option("--max-iterations", ca.max_iterations);
  cluster->add_option("--out-labels", ca.out_labels)->required();
  cluster->add_option("--out-provenance", ca.out_provenance);

  MergeArgs ma;
  auto* merge = app.add_subcommand("merge", "Iterative cluster merging");
  merge->add_option("--labels", ma.labels)->required();
  merge->add_option("--cloud", ma.cloud)->required();
  merge->add_option("--weak-labels", ma.weak)->required();
  merge->add_option("--provider", ma.provider, "uniform | oracle:<gt> | file:<rows>");
  merge->add_option("--rounds", ma.rounds);
  merge->add_option("--cond3", ma.cond3);
  merge->add_option("--cond4", ma.cond4);
  merge->add_option("--k-clusters", ma.k_clusters);
  merge->add_option("--inflate", ma.inflate);
  merge->add_option("--seg-channel", ma.seg_channel, "paper | narrative");
  merge->add_option("--out-labels", ma.out_labels)->required();

  BoxesArgs ba;
  auto* boxes = app.add_subcommand("boxes", "Pseudo bounding boxes from labeled clusters");
  boxes->add_option("--labels", ba.labels)->required();
  boxes->add_option("--cloud", ba.cloud)->required();
  boxes->add_option("--min-points", ba.min_points);
  boxes->add_option("--exclude-classes", ba.exclude, "Comma separated, e.g. 0,1");
  boxes->add_option("--out", ba.out)->required();

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "mIoU, AP and loss evaluation");
  eval->add_option("--pred-labels", ea.pred_labels);
  eval->add_option("--gt-labels", ea.gt_labels);
  eval->add_option("--classes", ea.classes);
  eval->add_option("--pred-boxes", ea.pred_boxes);
  eval->add_option("--gt-boxes", ea.gt_boxes);
  eval->add_option("--iou", ea.iou)->check(CLI::Range(0.0, 1.0));
  eval->add_option("--csv", ea.csv);
  eval->add_option("--loss", ea.loss, "ce | js | dice");
  eval->add_option("--matrix-a", ea.matrix_a, "Prediction (ce), p (js) or prediction (dice)");
  eval->add_option("--matrix-b", ea.matrix_b, "Target (ce), q (js) or ground truth (dice)");

  BenchArgs bka;
  auto* bench = app.add_subcommand("bench-knn", "Octree versus brute-force KNN timing");
  bench->add_option("--n", bka.n);
  bench->add_option("--k", bka.k);
  bench->add_option("--queries", bka.queries);
  bench->add_option("--leaf-capacity", bka.leaf);
  bench->add_option("--csv", bka.csv);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Full pipeline");
  run->add_option("--cloud", ra.cloud)->required();
  run->add_option("--weak-labels", ra.weak)->required();
  run->add_option("--out-dir", ra.out_dir)->required();
  run->add_option("--provider", ra.provider);
  run->add_option("--gt-labels", ra.gt_labels, "Enables the eval stage");
  run->add_option("--set", ra.sets, "Config override key=value (repeatable)");
  run->add_flag("--quiet", ra.quiet, "Suppress JSON-lines logs");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a synthetic scene with ground truth");
  synth->add_option("--scene", sa.scene, "room | planes | tiles");
  synth->add_option("--out-dir", sa.out_dir)->required();
  synth->add_option("--points", sa.points, "planes only");
  synth->add_option("--spacing", sa.spacing);
  synth->add_option("--labels-per-object", sa.per_object, "room only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*cluster) return cmd_cluster(g, ca);
    if (*merge) return cmd_merge(g, ma);
    if (*boxes) return cmd_boxes(g, ba);
    if (*eval) return cmd_eval(ea);
    if (*bench) return cmd_bench(g, bka);
    if (*run) return cmd_run(g, ra);
    if (*synth) return cmd_synth(g, sa);
  } catch (const StageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return e.input() ? kExitInput : kExitStage;
  } catch (const InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitStage;
  }
  return kExitStage;
}
