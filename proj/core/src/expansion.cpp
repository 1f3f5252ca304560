#include "wsl3d/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace wsl3d {

void ExpansionConfig::validate() const {
  if (!(gamma_deg > 0.0 && gamma_deg < 90.0)) {
    throw InputError(fmt::format("gamma must lie in (0, 90) degrees, got {}", gamma_deg));
  }
  if (!(sigma > 0.0)) throw InputError(fmt::format("sigma must be positive, got {}", sigma));
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) {
    throw InputError(fmt::format("seed fraction must lie in (0, 1], got {}", seed_fraction));
  }
  if (k_expand < 1) throw InputError("k_expand must be at least 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::AllLabeled: return "all-labeled";
    case Termination::SeedsExhausted: return "seeds-exhausted";
    case Termination::RegionsStable: return "regions-stable";
    case Termination::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

SeedSet select_seeds(const LocalGeometry& geometry, const WeakLabels& weak,
                     const ExpansionConfig& config) {
  const std::size_t n = geometry.size();
  weak.check_against(n);
  SeedSet set;
  std::vector<std::uint8_t> taken(n, 0);
  for (const auto& e : weak.entries) {
    if (taken[e.point_index]) continue;
    taken[e.point_index] = 1;
    set.seeds.push_back({e.point_index, SeedOrigin::TrueLabel});
  }

  std::vector<std::size_t> finite;
  finite.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(geometry.curvatures[i])) finite.push_back(i);
  }
  // Guard against 0.002 * 1000 landing a hair above 2.
  const auto wanted = static_cast<std::size_t>(
      std::ceil(config.seed_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t count = std::min(wanted, finite.size());
  auto by_curvature = [&](std::size_t a, std::size_t b) {
    const double ca = geometry.curvatures[a];
    const double cb = geometry.curvatures[b];
    return ca < cb || (ca == cb && a < b);
  };
  std::partial_sort(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(count),
                    finite.end(), by_curvature);
  for (std::size_t i = 0; i < count; ++i) {
    if (taken[finite[i]]) continue;
    taken[finite[i]] = 1;
    set.seeds.push_back({finite[i], SeedOrigin::LowCurvature});
  }
  return set;
}

ExpansionResult expand_regions(const PointCloud& cloud, const Octree& tree,
                               const LocalGeometry& geometry, const SeedSet& seeds,
                               const ExpansionConfig& config) {
  config.validate();
  const std::size_t n = cloud.size();
  if (tree.size() != n || geometry.size() != n) {
    throw std::invalid_argument("expand_regions: cloud, octree and geometry sizes differ");
  }
  const std::size_t budget = config.max_iterations > 0 ? config.max_iterations : 50 * n;
  const std::size_t k_query = std::min(config.k_expand + 1, n);  // +1 for the seed itself

  ExpansionResult result;
  result.labels = LabelMatrix(n);
  result.delta_phi_deg.assign(n, std::numeric_limits<float>::quiet_NaN());
  result.delta_r.assign(n, std::numeric_limits<float>::quiet_NaN());
  auto& cluster = result.labels.cluster_id;
  auto& provenance = result.labels.provenance;

  std::deque<std::size_t> promoted;
  std::deque<std::size_t> deferred;
  std::vector<std::uint8_t> queued(n, 0);
  std::size_t initial_cursor = 0;
  for (const auto& s : seeds.seeds) {
    if (s.point >= n) throw std::invalid_argument("seed index out of range");
    queued[s.point] = 1;
  }

  auto live_size = [&] {
    return promoted.size() + deferred.size() + (seeds.size() - initial_cursor);
  };

  int next_cluster = 0;
  std::size_t assigned = 0;
  // Convergence is judged per full pass over the live queue.
  std::size_t pass_remaining = live_size();
  std::size_t assigned_at_pass_start = 0;

  while (true) {
    if (assigned == n) {
      result.termination = Termination::AllLabeled;
      break;
    }
    if (pass_remaining == 0) {
      if (assigned == assigned_at_pass_start && live_size() > 0) {
        result.termination = Termination::RegionsStable;
        break;
      }
      pass_remaining = live_size();
      assigned_at_pass_start = assigned;
    }
    std::size_t s = 0;
    if (!promoted.empty()) {
      s = promoted.front();
      promoted.pop_front();
    } else if (initial_cursor < seeds.size()) {
      s = seeds.seeds[initial_cursor++].point;
    } else if (!deferred.empty()) {
      s = deferred.front();
      deferred.pop_front();
    } else {
      result.termination = Termination::SeedsExhausted;
      break;
    }
    if (result.iterations >= budget) {
      result.termination = Termination::MaxIterations;
      break;
    }
    ++result.iterations;
    if (pass_remaining > 0) --pass_remaining;

    if (cluster[s] < 0) {
      cluster[s] = next_cluster++;
      ++assigned;
    }
    const int seed_cluster = cluster[s];
    const bool seed_ok = !geometry.degenerate(s);
    const Vec3& seed_normal = geometry.normals[s];
    const double seed_r = geometry.curvatures[s];

    for (const auto& nb : tree.knn(cloud.points[s], k_query)) {
      const std::size_t i = nb.index;
      if (i == s || cluster[i] >= 0) continue;
      const bool point_ok = !geometry.degenerate(i);
      const double dphi = seed_ok && point_ok ? normal_angle(geometry.normals[i], seed_normal)
                                              : std::numeric_limits<double>::infinity();
      if (dphi <= config.gamma_deg) {
        const double dr = std::abs(geometry.curvatures[i] - seed_r);
        cluster[i] = seed_cluster;
        provenance[i] = static_cast<std::int64_t>(s);
        result.delta_phi_deg[i] = static_cast<float>(dphi);
        result.delta_r[i] = static_cast<float>(dr);
        ++assigned;
        if (dr <= config.sigma && !queued[i]) {
          queued[i] = 1;
          promoted.push_back(i);
        }
      } else if (!queued[i]) {
        queued[i] = 1;
        deferred.push_back(i);
      }
    }
  }

  result.clusters = static_cast<std::size_t>(next_cluster);
  return result;
}

std::string provenance_json(const ExpansionResult& result) {
  std::string out = "[";
  bool first = true;
  const auto& prov = result.labels.provenance;
  for (std::size_t i = 0; i < prov.size(); ++i) {
    if (prov[i] < 0) continue;
    out += first ? "\n" : ",\n";
    first = false;
    out += fmt::format(R"(  {{"point": {}, "seed": {}, "delta_phi_deg": {:.6f}, "delta_r": {:.6f}}})", i,
                       prov[i], result.delta_phi_deg[i], result.delta_r[i]);
  }
  out += first ? "]\n" : "\n]\n";
  return out;
}

void write_provenance(const ExpansionResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open {} for writing", path.string()));
  out << provenance_json(result);
  if (!out) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

int majority_class(const std::vector<int>& classes) {
  std::map<int, std::size_t> votes;
  for (int c : classes) ++votes[c];
  int best = -1;
  std::size_t best_votes = 0;
  for (const auto& [c, v] : votes) {
    if (v > best_votes) {
      best = c;
      best_votes = v;
    }
  }
  return best;
}

AttachResult attach_cluster_labels(const LabelMatrix& labels, const WeakLabels& weak) {
  weak.check_against(labels.size());
  AttachResult out;
  out.labels = labels;
  std::map<int, std::vector<int>> classes_by_cluster;
  for (const auto& e : weak.entries) {
    const int c = labels.cluster_id[e.point_index];
    if (c >= 0) classes_by_cluster[c].push_back(e.class_id);
  }
  std::map<int, int> chosen;
  for (auto& [cluster, classes] : classes_by_cluster) {
    const int label = majority_class(classes);
    chosen[cluster] = label;
    std::sort(classes.begin(), classes.end());
    if (classes.front() != classes.back()) out.conflicts.push_back({cluster, classes, label});
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels.cluster_id[i];
    if (c < 0) {
      out.labels.semantic_label[i] = -1;
      continue;
    }
    const auto it = chosen.find(c);
    out.labels.semantic_label[i] = it == chosen.end() ? -1 : it->second;
  }
  for (const auto& e : weak.entries) {
    if (labels.cluster_id[e.point_index] >= 0) {
      out.labels.semantic_label[e.point_index] = e.class_id;
    }
  }
  return out;
}

}  // namespace wsl3d
