#include "wsl3d/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "wsl3d/metrics.hpp"

namespace wsl3d {

StageError::StageError(std::string stage, const std::string& what, bool input)
    : std::runtime_error(fmt::format("[{}] {}", stage, what)),
      stage_(std::move(stage)),
      input_(input) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw InputError(fmt::format("config key '{}': cannot parse '{}'", key, value));
  }
  return out;
}

std::set<int> parse_int_list(const std::string& key, const std::string& value) {
  std::set<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(parse_number<int>(key, item));
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"gamma", [](auto& c, auto& k, auto& v) { c.expansion.gamma_deg = parse_number<double>(k, v); }},
      {"sigma", [](auto& c, auto& k, auto& v) { c.expansion.sigma = parse_number<double>(k, v); }},
      {"k_expand",
       [](auto& c, auto& k, auto& v) { c.expansion.k_expand = parse_number<std::size_t>(k, v); }},
      {"seed_fraction",
       [](auto& c, auto& k, auto& v) { c.expansion.seed_fraction = parse_number<double>(k, v); }},
      {"max_iterations",
       [](auto& c, auto& k, auto& v) {
         c.expansion.max_iterations = parse_number<std::size_t>(k, v);
       }},
      {"geom_k", [](auto& c, auto& k, auto& v) { c.geom_k = parse_number<std::size_t>(k, v); }},
      {"curvature_mode",
       [](auto& c, auto&, auto& v) { c.curvature_mode = parse_curvature_mode(v); }},
      {"leaf_capacity",
       [](auto& c, auto& k, auto& v) { c.leaf_capacity = parse_number<std::size_t>(k, v); }},
      {"rounds", [](auto& c, auto& k, auto& v) { c.merge.n_total = parse_number<std::size_t>(k, v); }},
      {"cond3", [](auto& c, auto& k, auto& v) { c.merge.cond3 = parse_number<double>(k, v); }},
      {"cond4", [](auto& c, auto& k, auto& v) { c.merge.cond4 = parse_number<double>(k, v); }},
      {"k_clusters",
       [](auto& c, auto& k, auto& v) { c.merge.k_clusters = parse_number<std::size_t>(k, v); }},
      {"inflate", [](auto& c, auto& k, auto& v) { c.merge.inflate = parse_number<double>(k, v); }},
      {"seg_channel", [](auto& c, auto&, auto& v) { c.merge.channel = parse_seg_channel(v); }},
      {"provider", [](auto& c, auto&, auto& v) { c.provider = v; }},
      {"gt_labels", [](auto& c, auto&, auto& v) { c.gt_labels = v; }},
      {"min_points",
       [](auto& c, auto& k, auto& v) { c.boxes.min_points = parse_number<std::size_t>(k, v); }},
      {"exclude_classes",
       [](auto& c, auto& k, auto& v) { c.boxes.exclude_classes = parse_int_list(k, v); }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) { c.threads = parse_number<unsigned>(k, v); }},
  };
  return table;
}

using Clock = std::chrono::steady_clock;

class StageRunner {
 public:
  StageRunner(std::ostream* log, RunReport& report) : log_(log), report_(report) {}

  template <typename Fn>
  auto run(const std::string& stage, Fn&& fn) {
    emit({{"stage", stage}, {"event", "start"}});
    const auto t0 = Clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish(stage, t0);
      } else {
        auto out = fn();
        finish(stage, t0);
        return out;
      }
    } catch (const StageError&) {
      throw;
    } catch (const InputError& e) {
      fail(stage, e.what());
      throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
      fail(stage, e.what());
      throw StageError(stage, e.what(), false);
    }
  }

  void emit(const nlohmann::ordered_json& record) {
    if (log_ != nullptr) *log_ << record.dump() << '\n' << std::flush;
  }

 private:
  void finish(const std::string& stage, Clock::time_point t0) {
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    report_.timings.push_back({stage, ms});
    emit({{"stage", stage}, {"event", "end"}, {"ms", ms}});
  }
  void fail(const std::string& stage, const std::string& what) {
    emit({{"stage", stage}, {"event", "error"}, {"message", what}});
  }

  std::ostream* log_;
  RunReport& report_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw InputError(fmt::format("unknown config key '{}'", key));
  it->second(*this, key, value);
}

void PipelineConfig::validate() const {
  expansion.validate();
  merge.validate();
  if (geom_k < 3) throw InputError(fmt::format("geom_k must be at least 3, got {}", geom_k));
  if (leaf_capacity == 0) throw InputError("leaf_capacity must be positive");
  if (threads == 0) throw InputError("threads must be positive");
  if (provider != "uniform" && provider.rfind("oracle:", 0) != 0 &&
      provider.rfind("file:", 0) != 0) {
    throw InputError(fmt::format("unknown provider '{}'", provider));
  }
}

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, fn] : setters()) out.push_back(k);
    return out;
  }();
  return names;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("{}: cannot open config", path.string()));
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(fmt::format("{}:{}: expected key = value", path.string(), line_no));
    }
    try {
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  config.validate();
  return config;
}

PipelineConfig apply_overrides(PipelineConfig base,
                               const std::map<std::string, std::string>& overrides) {
  for (const auto& [k, v] : overrides) base.set(k, v);
  base.validate();
  return base;
}

double label_coverage(const LabelMatrix& labels) {
  if (labels.size() == 0) return 0.0;
  const auto n = std::count_if(labels.semantic_label.begin(), labels.semantic_label.end(),
                               [](int s) { return s >= 0; });
  return static_cast<double>(n) / static_cast<double>(labels.size());
}

std::size_t true_label_violations(const LabelMatrix& labels, const WeakLabels& weak) {
  std::size_t bad = 0;
  for (const auto& e : weak.entries) {
    if (e.point_index >= labels.size() || labels.semantic_label[e.point_index] != e.class_id) {
      ++bad;
    }
  }
  return bad;
}

PipelineResult run_pipeline(const PipelineConfig& config, const PointCloud& cloud,
                            const WeakLabels& weak, const SemanticProvider& provider,
                            const std::filesystem::path& out_dir, const std::vector<int>* gt,
                            std::ostream* log) {
  PipelineResult result;
  RunReport& report = result.report;
  StageRunner stages(log, report);

  stages.run("validate", [&] {
    config.validate();
    cloud.validate();
    weak.validate();
    if (weak.empty()) throw InputError("weak-label set is empty");
    weak.check_against(cloud.size());
    if (cloud.size() < config.geom_k) {
      throw InputError(fmt::format("cloud has {} points, fewer than geom_k = {}", cloud.size(),
                                   config.geom_k));
    }
    if (provider.num_classes() != weak.num_classes) {
      throw InputError(fmt::format("provider has {} classes, weak labels {}",
                                   provider.num_classes(), weak.num_classes));
    }
    if (gt != nullptr && gt->size() != cloud.size()) {
      throw InputError(fmt::format("ground truth has {} labels for {} points", gt->size(),
                                   cloud.size()));
    }
  });
  report.points = cloud.size();
  report.weak_labels = weak.size();

  const Octree tree =
      stages.run("octree", [&] { return Octree(cloud.points, config.leaf_capacity); });
  const LocalGeometry geometry = stages.run("geometry", [&] {
    return estimate_geometry(cloud, tree, config.geom_k, config.curvature_mode, config.threads);
  });

  LabelMatrix expanded = stages.run("expand", [&] {
    const SeedSet seeds = select_seeds(geometry, weak, config.expansion);
    report.seeds = seeds.size();
    result.expansion = expand_regions(cloud, tree, geometry, seeds, config.expansion);
    auto attached = attach_cluster_labels(result.expansion.labels, weak);
    for (const auto& c : attached.conflicts) {
      stages.emit({{"stage", "expand"},
                   {"event", "label-conflict"},
                   {"cluster", c.cluster_id},
                   {"chosen", c.chosen}});
    }
    return attached.labels;
  });
  report.expansion_clusters = result.expansion.clusters;
  report.expansion_termination = to_string(result.expansion.termination);
  report.coverage_expansion = label_coverage(expanded);
  stages.emit({{"stage", "expand"},
               {"event", "summary"},
               {"clusters", report.expansion_clusters},
               {"termination", report.expansion_termination},
               {"coverage", report.coverage_expansion}});

  MergeResult merged = stages.run("merge", [&] {
    return run_merging(expanded, cloud, weak, provider, config.merge);
  });
  report.merge_cluster_counts.push_back(merged.initial_clusters);
  for (const auto& r : merged.rounds) {
    report.merge_cluster_counts.push_back(r.clusters_after);
    report.refused_merges += r.refused;
    stages.emit({{"stage", "merge"},
                 {"event", "round"},
                 {"round", r.round},
                 {"before", r.clusters_before},
                 {"after", r.clusters_after},
                 {"merges", r.merges},
                 {"refused", r.refused}});
  }
  result.final_labels = std::move(merged.labels);
  report.final_clusters = merged.clusters.size();
  report.coverage_final = label_coverage(result.final_labels);
  report.true_label_violations = true_label_violations(result.final_labels, weak);

  result.boxes = stages.run("boxes", [&] {
    return instance_boxes(result.final_labels, cloud, config.boxes);
  });
  report.boxes = result.boxes.size();

  if (gt != nullptr) {
    stages.run("eval", [&] {
      report.miou = miou(result.final_labels.semantic_label, *gt, weak.num_classes).mean;
    });
  }

  if (!out_dir.empty()) {
    stages.run("write", [&] {
      std::filesystem::create_directories(out_dir);
      report.outputs["labels"] = out_dir / "labels.txt";
      report.outputs["colored_ply"] = out_dir / "labels.ply";
      report.outputs["provenance"] = out_dir / "provenance.json";
      report.outputs["boxes"] = out_dir / "boxes.json";
      report.outputs["report"] = out_dir / "report.json";
      write_labeled_cloud(cloud, result.final_labels, report.outputs["labels"],
                          LabelOutput::LabelsText);
      write_labeled_cloud(cloud, result.final_labels, report.outputs["colored_ply"],
                          LabelOutput::ColoredPly);
      write_provenance(result.expansion, report.outputs["provenance"]);
      export_boxes(result.boxes, report.outputs["boxes"]);
    });
    // The report is written last so it carries every timing.
    write_text(report.outputs["report"], report_json(report));
  }
  stages.emit({{"stage", "pipeline"},
               {"event", "done"},
               {"final_clusters", report.final_clusters},
               {"coverage", report.coverage_final}});
  return result;
}

RunReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& cloud_path,
                       const std::filesystem::path& weak_path,
                       const std::filesystem::path& out_dir, std::ostream* log) {
  RunReport scratch;
  StageRunner stages(log, scratch);
  auto [cloud, weak, provider, gt] = stages.run("load", [&] {
    PointCloud c = load_cloud(cloud_path);
    WeakLabels w = load_weak_labels(weak_path);
    w.check_against(c.size());
    auto p = make_provider(config.provider, w.num_classes);
    std::optional<std::vector<int>> g;
    if (!config.gt_labels.empty()) g = read_semantic_labels(config.gt_labels);
    return std::make_tuple(std::move(c), std::move(w), std::move(p), std::move(g));
  });
  PipelineResult result =
      run_pipeline(config, cloud, weak, *provider, out_dir, gt ? &*gt : nullptr, log);
  result.report.timings.insert(result.report.timings.begin(), scratch.timings.begin(),
                               scratch.timings.end());
  if (!out_dir.empty()) write_text(out_dir / "report.json", report_json(result.report));
  return result.report;
}

std::string report_json(const RunReport& report) {
  nlohmann::ordered_json j;
  j["points"] = report.points;
  j["weak_labels"] = report.weak_labels;
  j["seeds"] = report.seeds;
  j["expansion_clusters"] = report.expansion_clusters;
  j["expansion_termination"] = report.expansion_termination;
  j["merge_cluster_counts"] = report.merge_cluster_counts;
  j["final_clusters"] = report.final_clusters;
  j["refused_merges"] = report.refused_merges;
  j["coverage_expansion"] = report.coverage_expansion;
  j["coverage_final"] = report.coverage_final;
  j["boxes"] = report.boxes;
  j["miou"] = report.miou ? nlohmann::ordered_json(*report.miou) : nlohmann::ordered_json();
  j["true_label_violations"] = report.true_label_violations;
  auto& t = j["timings_ms"] = nlohmann::ordered_json::object();
  for (const auto& s : report.timings) t[s.stage] = s.ms;
  auto& o = j["outputs"] = nlohmann::ordered_json::object();
  for (const auto& [k, p] : report.outputs) o[k] = p.string();
  return j.dump(2) + "\n";
}

}  // namespace wsl3d
