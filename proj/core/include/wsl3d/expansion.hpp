#pragma once

// Seed selection and similar-region expansion: grows clusters from weakly
// labeled and low-curvature seed points while neighboring normals agree
// (Condition 1) and curvature stays close (Condition 2).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsl3d/cloud.hpp"
#include "wsl3d/geometry.hpp"
#include "wsl3d/octree.hpp"

namespace wsl3d {

struct ExpansionConfig {
  /// Condition 1 threshold on the folded normal angle, degrees.
  double gamma_deg = 2.2;
  /// Condition 2 threshold on |r_i - r_seed|, in the curvature mode's units.
  double sigma = 0.35;
  std::size_t k_expand = 16;
  /// Fraction of points taken as lowest-curvature seeds.
  double seed_fraction = 0.002;
  /// Pop budget; 0 means 50 * point count.
  std::size_t max_iterations = 0;

  /// Throws InputError when a field is outside its valid range.
  void validate() const;
};

enum class SeedOrigin : std::uint8_t { TrueLabel, LowCurvature, Promoted };

struct Seed {
  std::size_t point = 0;
  SeedOrigin origin = SeedOrigin::LowCurvature;
};

/// Initial seeds: weakly labeled points first (file order), then the lowest
/// finite curvatures ascending, ties by index. No point appears twice.
struct SeedSet {
  std::vector<Seed> seeds;

  [[nodiscard]] std::size_t size() const noexcept { return seeds.size(); }
};

SeedSet select_seeds(const LocalGeometry& geometry, const WeakLabels& weak,
                     const ExpansionConfig& config);

enum class Termination {
  AllLabeled,
  SeedsExhausted,
  RegionsStable,
  MaxIterations,
};

std::string to_string(Termination t);

struct ExpansionResult {
  LabelMatrix labels;
  /// Condition values measured when a point was admitted by a seed; NaN for
  /// points that opened their own cluster or stayed unassigned.
  std::vector<float> delta_phi_deg;
  std::vector<float> delta_r;
  std::size_t iterations = 0;
  std::size_t clusters = 0;
  Termination termination = Termination::SeedsExhausted;
};

/// Runs the expansion loop. Worklist discipline: seeds promoted by
/// Condition 2 are expanded first (FIFO), so a region grows to completion;
/// then the next initial seed; then points deferred because they failed
/// Condition 1. A deferred point opens a new cluster when it is popped,
/// unless another region has absorbed it in the meantime.
ExpansionResult expand_regions(const PointCloud& cloud, const Octree& tree,
                               const LocalGeometry& geometry, const SeedSet& seeds,
                               const ExpansionConfig& config);

/// JSON array of {point, seed, delta_phi_deg, delta_r}, one entry per point
/// admitted by a seed, in point order.
std::string provenance_json(const ExpansionResult& result);
void write_provenance(const ExpansionResult& result, const std::filesystem::path& path);

struct LabelConflict {
  int cluster_id = -1;
  /// Classes of the weakly labeled points inside the cluster, ascending.
  std::vector<int> classes;
  int chosen = -1;
};

struct AttachResult {
  LabelMatrix labels;
  std::vector<LabelConflict> conflicts;
};

/// Propagates each cluster's weak label to all its points. Conflicting
/// clusters take the majority class (ties to the lowest id). Weakly labeled
/// points always keep their own class.
AttachResult attach_cluster_labels(const LabelMatrix& labels, const WeakLabels& weak);

/// Majority vote over class ids, ties to the lowest class; -1 when empty.
int majority_class(const std::vector<int>& classes);

}  // namespace wsl3d
