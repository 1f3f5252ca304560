#pragma once

// Iterative cluster merging. Neighboring clusters are scored by
//
//   S = y1 * M_color + y2 * M_scale + y3 * M_A + y4 * M_B
//
// where y1 = y2 = y3 = 1 - m/N_total, y4 = m/N_total for merge round m, and
// (M_A, M_B) is (M_seg, M_iou) or (M_iou, M_seg) depending on SegChannel.
// A pair merges when S >= cond3; the absorbed cluster also becomes a new
// seed when S >= cond4.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsl3d/aabb.hpp"
#include "wsl3d/cloud.hpp"

namespace wsl3d {

struct ClusterDescriptor {
  int cluster_id = -1;
  std::vector<std::size_t> point_indices;
  Vec3 centroid = Vec3::Zero();
  std::optional<Vec3> mean_color;
  Aabb aabb;
  /// Class probabilities, sums to 1.
  std::vector<double> semantic_row;
  /// Weak-label votes inside the cluster: class -> count.
  std::map<int, std::size_t> true_label_votes;
  /// Majority weak label, -1 when the cluster holds none.
  int dominant_label = -1;

  [[nodiscard]] std::size_t size() const noexcept { return point_indices.size(); }
};

/// Union of two descriptors: concatenated points (sorted), count-weighted
/// centroid, color and semantic row, merged box and votes. Keeps a's id.
ClusterDescriptor merge_descriptors(const ClusterDescriptor& a, const ClusterDescriptor& b);

// ---------------------------------------------------------------------------
// Semantic providers

/// Source of per-cluster class probabilities. Stands in for a learned
/// cluster-level classifier.
class SemanticProvider {
 public:
  virtual ~SemanticProvider() = default;
  [[nodiscard]] virtual int num_classes() const = 0;
  /// A probability row for the cluster; `points` are its member indices.
  [[nodiscard]] virtual std::vector<double> row(int cluster_id,
                                                std::span<const std::size_t> points) const = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class UniformProvider final : public SemanticProvider {
 public:
  explicit UniformProvider(int num_classes);
  [[nodiscard]] int num_classes() const override { return classes_; }
  [[nodiscard]] std::vector<double> row(int, std::span<const std::size_t>) const override;
  [[nodiscard]] std::string name() const override { return "uniform"; }

 private:
  int classes_;
};

/// Ground-truth class histogram of the cluster's points. Test use only.
class OracleProvider final : public SemanticProvider {
 public:
  OracleProvider(std::vector<int> ground_truth, int num_classes);
  [[nodiscard]] int num_classes() const override { return classes_; }
  [[nodiscard]] std::vector<double> row(int, std::span<const std::size_t> points) const override;
  [[nodiscard]] std::string name() const override { return "oracle"; }

 private:
  std::vector<int> gt_;
  int classes_;
};

/// Rows keyed by cluster id, loaded from
///   clusters <N> classes <C>
///   <cluster_id> <p_0> ... <p_{C-1}>
/// Rows are normalized at load. Unknown cluster ids get a uniform row.
class FileProvider final : public SemanticProvider {
 public:
  FileProvider(std::map<int, std::vector<double>> rows, int num_classes);
  static FileProvider load(const std::filesystem::path& path);

  [[nodiscard]] int num_classes() const override { return classes_; }
  [[nodiscard]] std::vector<double> row(int cluster_id,
                                        std::span<const std::size_t>) const override;
  [[nodiscard]] std::string name() const override { return "file"; }

 private:
  std::map<int, std::vector<double>> rows_;
  int classes_;
};

/// Parses "uniform", "oracle:<gt labels path>" or "file:<rows path>".
std::unique_ptr<SemanticProvider> make_provider(const std::string& spec, int num_classes);

/// One descriptor per live cluster id, ascending by id.
std::vector<ClusterDescriptor> build_descriptors(const LabelMatrix& labels,
                                                 const PointCloud& cloud,
                                                 const WeakLabels& weak,
                                                 const SemanticProvider& provider);

// ---------------------------------------------------------------------------
// Similarities and schedule

struct GeometricSimilarity {
  double color = 0.5;  // 0.5 placeholder when either cluster lacks color
  double scale = 0.0;
  double iou = 0.0;
  bool color_available = false;
};

GeometricSimilarity geometric_similarities(const ClusterDescriptor& a,
                                           const ClusterDescriptor& b, double inflate);

/// 1 / (1 + ||p_a - p_b||).
double semantic_similarity(std::span<const double> row_a, std::span<const double> row_b);

struct ScheduleWeights {
  double y1 = 1.0;
  double y2 = 1.0;
  double y3 = 1.0;
  double y4 = 0.0;

  [[nodiscard]] double sum() const { return y1 + y2 + y3 + y4; }
};

/// Throws std::invalid_argument when n_total is 0 or round > n_total.
ScheduleWeights schedule_weights(std::size_t round, std::size_t n_total);

enum class SegChannel {
  /// y3 weights M_seg, y4 weights M_iou.
  Literal,
  /// y3 weights M_iou, y4 weights M_seg: semantics gain weight over rounds.
  Narrative,
};

SegChannel parse_seg_channel(const std::string& name);
std::string to_string(SegChannel channel);

struct MergeSchedule {
  std::size_t n_total = 10;
  std::size_t round = 0;
  SegChannel channel = SegChannel::Narrative;

  [[nodiscard]] ScheduleWeights weights() const { return schedule_weights(round, n_total); }
};

/// Weighted score. When either cluster lacks color, y1 is split equally over
/// the other three channels.
double similarity(const ClusterDescriptor& a, const ClusterDescriptor& b,
                  const ScheduleWeights& weights, SegChannel channel, double inflate);

// ---------------------------------------------------------------------------
// Merging

struct MergeConfig {
  std::size_t n_total = 10;
  double cond3 = 1.25;
  double cond4 = 1.5;
  std::size_t k_clusters = 8;
  double inflate = 0.05;
  SegChannel channel = SegChannel::Narrative;

  void validate() const;
};

struct RoundStats {
  std::size_t round = 0;
  std::size_t clusters_before = 0;
  std::size_t clusters_after = 0;
  std::size_t merges = 0;
  /// Merges refused because both sides carried different weak labels.
  std::size_t refused = 0;
  std::size_t probes = 0;
};

/// One cluster-granularity expansion pass. Probe order: clusters holding
/// weak labels (largest first), then the rest (largest first); probes
/// promoted by cond4 are handled before the next initial probe. Each probe
/// scores its k_clusters nearest clusters by centroid distance using the
/// descriptors as they were at round start.
std::vector<ClusterDescriptor> merge_round(const std::vector<ClusterDescriptor>& clusters,
                                           const MergeSchedule& schedule,
                                           const MergeConfig& config,
                                           RoundStats* stats = nullptr);

struct MergeResult {
  LabelMatrix labels;
  std::vector<ClusterDescriptor> clusters;
  std::vector<RoundStats> rounds;
  std::size_t initial_clusters = 0;
};

/// Runs rounds m = 0 .. n_total-1 and writes cluster ids and the propagated
/// majority weak label back per point. Weakly labeled points keep their class.
MergeResult run_merging(const LabelMatrix& labels, const PointCloud& cloud,
                        const WeakLabels& weak, const SemanticProvider& provider,
                        const MergeConfig& config);

/// Writes descriptors back into a label matrix (provenance copied from
/// `base`).
LabelMatrix labels_from_clusters(const std::vector<ClusterDescriptor>& clusters,
                                 const LabelMatrix& base, const WeakLabels& weak);

}  // namespace wsl3d
