#pragma once

// End-to-end orchestration: load -> octree -> geometry -> expand -> merge ->
// boxes -> eval, with key=value configuration and JSON-lines stage logs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsl3d/detection.hpp"
#include "wsl3d/expansion.hpp"
#include "wsl3d/geometry.hpp"
#include "wsl3d/merge.hpp"

namespace wsl3d {

/// Failure inside a named stage. `input` marks errors caused by bad input
/// data rather than an internal failure.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what, bool input);
  [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
  [[nodiscard]] bool input() const noexcept { return input_; }

 private:
  std::string stage_;
  bool input_;
};

struct PipelineConfig {
  ExpansionConfig expansion;
  MergeConfig merge;
  std::size_t geom_k = 16;
  CurvatureMode curvature_mode = CurvatureMode::RadiusNormalized;
  std::size_t leaf_capacity = 32;
  BoxFilter boxes;
  /// "uniform", "oracle:<path>" or "file:<path>".
  std::string provider = "uniform";
  /// Optional ground-truth semantic labels for the eval stage.
  std::string gt_labels;
  std::uint64_t seed = 42;
  unsigned threads = 1;

  /// Applies one key=value setting. Throws InputError on an unknown key or
  /// an unparsable value.
  void set(const std::string& key, const std::string& value);
  /// Throws InputError when any field is outside its module's valid range.
  void validate() const;

  [[nodiscard]] static const std::vector<std::string>& keys();
};

/// Reads `key = value` lines; `#` starts a comment. Later keys override
/// earlier ones. The result is validated.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Applies settings on top of `base`, then validates.
PipelineConfig apply_overrides(PipelineConfig base,
                               const std::map<std::string, std::string>& overrides);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct RunReport {
  std::size_t points = 0;
  std::size_t weak_labels = 0;
  std::size_t seeds = 0;
  std::size_t expansion_clusters = 0;
  std::string expansion_termination;
  /// Cluster count before merging, then after each round.
  std::vector<std::size_t> merge_cluster_counts;
  std::size_t final_clusters = 0;
  std::size_t refused_merges = 0;
  double coverage_expansion = 0.0;
  double coverage_final = 0.0;
  std::size_t boxes = 0;
  std::optional<double> miou;
  std::size_t true_label_violations = 0;
  std::vector<StageTiming> timings;
  std::map<std::string, std::filesystem::path> outputs;
};

/// Fraction of points with a semantic label.
double label_coverage(const LabelMatrix& labels);

/// Weakly labeled points whose semantic label differs from the given class.
std::size_t true_label_violations(const LabelMatrix& labels, const WeakLabels& weak);

struct PipelineResult {
  RunReport report;
  ExpansionResult expansion;
  LabelMatrix final_labels;
  std::vector<Box3D> boxes;
};

/// In-memory run. Writes labels.txt, labels.ply, provenance.json,
/// boxes.json and report.json into `out_dir` when it is non-empty. `gt`
/// (optional) enables the eval stage. Logs go to `log` when non-null.
PipelineResult run_pipeline(const PipelineConfig& config, const PointCloud& cloud,
                            const WeakLabels& weak, const SemanticProvider& provider,
                            const std::filesystem::path& out_dir,
                            const std::vector<int>* gt = nullptr, std::ostream* log = nullptr);

/// File-based run: loads inputs, builds the provider from config.provider
/// and the ground truth from config.gt_labels.
RunReport run_pipeline(const PipelineConfig& config, const std::filesystem::path& cloud_path,
                       const std::filesystem::path& weak_path,
                       const std::filesystem::path& out_dir, std::ostream* log = nullptr);

std::string report_json(const RunReport& report);

}  // namespace wsl3d
