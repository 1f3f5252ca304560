#include "wsl3d/merge.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "wsl3d/expansion.hpp"
#include "wsl3d/octree.hpp"

namespace wsl3d {
namespace {

std::vector<double> normalized(std::vector<double> row) {
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("probability row sums to zero");
  for (auto& v : row) v /= total;
  return row;
}

int dominant_of(const std::map<int, std::size_t>& votes) {
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

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

ClusterDescriptor merge_descriptors(const ClusterDescriptor& a, const ClusterDescriptor& b) {
  ClusterDescriptor out;
  out.cluster_id = a.cluster_id;
  out.point_indices.reserve(a.size() + b.size());
  std::merge(a.point_indices.begin(), a.point_indices.end(), b.point_indices.begin(),
             b.point_indices.end(), std::back_inserter(out.point_indices));
  const double wa = static_cast<double>(a.size());
  const double wb = static_cast<double>(b.size());
  const double w = wa + wb;
  out.centroid = (wa * a.centroid + wb * b.centroid) / w;
  if (a.mean_color && b.mean_color) out.mean_color = (wa * *a.mean_color + wb * *b.mean_color) / w;
  out.aabb = a.aabb;
  out.aabb.extend(b.aabb);
  if (a.semantic_row.size() != b.semantic_row.size()) {
    throw std::invalid_argument("merge_descriptors: semantic rows differ in length");
  }
  out.semantic_row.resize(a.semantic_row.size());
  for (std::size_t c = 0; c < out.semantic_row.size(); ++c) {
    out.semantic_row[c] = (wa * a.semantic_row[c] + wb * b.semantic_row[c]) / w;
  }
  if (!out.semantic_row.empty()) out.semantic_row = normalized(std::move(out.semantic_row));
  out.true_label_votes = a.true_label_votes;
  for (const auto& [c, v] : b.true_label_votes) out.true_label_votes[c] += v;
  out.dominant_label = dominant_of(out.true_label_votes);
  return out;
}

// ---------------------------------------------------------------------------
// Providers

UniformProvider::UniformProvider(int num_classes) : classes_(num_classes) {
  if (num_classes <= 0) throw std::invalid_argument("provider needs at least one class");
}

std::vector<double> UniformProvider::row(int, std::span<const std::size_t>) const {
  return std::vector<double>(static_cast<std::size_t>(classes_), 1.0 / classes_);
}

OracleProvider::OracleProvider(std::vector<int> ground_truth, int num_classes)
    : gt_(std::move(ground_truth)), classes_(num_classes) {
  if (num_classes <= 0) throw std::invalid_argument("provider needs at least one class");
}

std::vector<double> OracleProvider::row(int, std::span<const std::size_t> points) const {
  std::vector<double> hist(static_cast<std::size_t>(classes_), 0.0);
  double total = 0.0;
  for (std::size_t p : points) {
    if (p >= gt_.size()) throw std::out_of_range("oracle provider: point index out of range");
    const int c = gt_[p];
    if (c < 0 || c >= classes_) continue;
    hist[static_cast<std::size_t>(c)] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) return std::vector<double>(hist.size(), 1.0 / classes_);
  for (auto& h : hist) h /= total;
  return hist;
}

FileProvider::FileProvider(std::map<int, std::vector<double>> rows, int num_classes)
    : rows_(std::move(rows)), classes_(num_classes) {
  if (num_classes <= 0) throw std::invalid_argument("provider needs at least one class");
  for (auto& [id, r] : rows_) {
    if (r.size() != static_cast<std::size_t>(classes_)) {
      throw InputError(fmt::format("provider row for cluster {} has {} values, expected {}", id,
                                   r.size(), classes_));
    }
    for (double v : r) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InputError(fmt::format("provider row for cluster {} has an invalid value", id));
      }
    }
    if (!(std::accumulate(r.begin(), r.end(), 0.0) > 0.0)) {
      throw InputError(fmt::format("provider row for cluster {} sums to zero", id));
    }
    r = normalized(std::move(r));
  }
}

FileProvider FileProvider::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  std::size_t line_no = 0;
  std::size_t declared = 0;
  int classes = -1;
  std::map<int, std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string first;
    if (!(ss >> first) || first.front() == '#') continue;
    if (classes < 0) {
      std::string kw;
      if (first != "clusters" || !(ss >> declared >> kw >> classes) || kw != "classes" ||
          classes <= 0) {
        throw InputError(fmt::format("{}:{}: expected header 'clusters <N> classes <C>'",
                                     path.string(), line_no));
      }
      continue;
    }
    int id = 0;
    try {
      id = std::stoi(first);
    } catch (const std::exception&) {
      throw InputError(fmt::format("{}:{}: bad cluster id '{}'", path.string(), line_no, first));
    }
    std::vector<double> row;
    double v = 0.0;
    while (ss >> v) row.push_back(v);
    if (!ss.eof()) {
      throw InputError(fmt::format("{}:{}: cannot parse probability", path.string(), line_no));
    }
    if (row.size() != static_cast<std::size_t>(classes)) {
      throw InputError(fmt::format("{}:{}: expected {} probabilities, got {}", path.string(),
                                   line_no, classes, row.size()));
    }
    if (!rows.emplace(id, std::move(row)).second) {
      throw InputError(fmt::format("{}:{}: duplicate cluster {}", path.string(), line_no, id));
    }
  }
  if (classes < 0) throw InputError(fmt::format("{}: missing header", path.string()));
  if (rows.size() != declared) {
    throw InputError(fmt::format("{}: header declares {} clusters but {} rows follow",
                                 path.string(), declared, rows.size()));
  }
  return FileProvider(std::move(rows), classes);
}

std::vector<double> FileProvider::row(int cluster_id, std::span<const std::size_t>) const {
  const auto it = rows_.find(cluster_id);
  if (it == rows_.end()) return std::vector<double>(static_cast<std::size_t>(classes_), 1.0 / classes_);
  return it->second;
}

std::unique_ptr<SemanticProvider> make_provider(const std::string& spec, int num_classes) {
  if (spec == "uniform") return std::make_unique<UniformProvider>(num_classes);
  if (spec.rfind("oracle:", 0) == 0) {
    auto gt = read_semantic_labels(spec.substr(7));
    return std::make_unique<OracleProvider>(std::move(gt), num_classes);
  }
  if (spec.rfind("file:", 0) == 0) {
    auto provider = FileProvider::load(spec.substr(5));
    if (provider.num_classes() != num_classes) {
      throw InputError(fmt::format("provider has {} classes but the labels use {}",
                                   provider.num_classes(), num_classes));
    }
    return std::make_unique<FileProvider>(std::move(provider));
  }
  throw InputError(fmt::format("unknown provider '{}'; use uniform, oracle:<path> or file:<path>",
                               spec));
}

std::vector<ClusterDescriptor> build_descriptors(const LabelMatrix& labels,
                                                 const PointCloud& cloud,
                                                 const WeakLabels& weak,
                                                 const SemanticProvider& provider) {
  if (labels.size() != cloud.size()) {
    throw std::invalid_argument("build_descriptors: label and cloud sizes differ");
  }
  weak.check_against(cloud.size());
  std::map<int, std::size_t> slot;
  std::vector<ClusterDescriptor> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels.cluster_id[i];
    if (c >= 0) slot.emplace(c, 0);
  }
  out.resize(slot.size());
  std::size_t next = 0;
  for (auto& [id, s] : slot) {
    s = next;
    out[next++].cluster_id = id;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels.cluster_id[i];
    if (c >= 0) out[slot[c]].point_indices.push_back(i);
  }
  for (const auto& e : weak.entries) {
    const int c = labels.cluster_id[e.point_index];
    if (c >= 0) ++out[slot[c]].true_label_votes[e.class_id];
  }
  for (auto& d : out) {
    Vec3 sum = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    d.aabb = Aabb::of_point(cloud.points[d.point_indices.front()]);
    for (std::size_t p : d.point_indices) {
      sum += cloud.points[p];
      d.aabb.extend(cloud.points[p]);
      if (cloud.has_colors()) color += cloud.colors[p];
    }
    const double n = static_cast<double>(d.size());
    d.centroid = sum / n;
    if (cloud.has_colors()) d.mean_color = color / n;
    d.semantic_row = normalized(provider.row(d.cluster_id, d.point_indices));
    d.dominant_label = dominant_of(d.true_label_votes);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarities

GeometricSimilarity geometric_similarities(const ClusterDescriptor& a,
                                           const ClusterDescriptor& b, double inflate) {
  GeometricSimilarity s;
  if (a.mean_color && b.mean_color) {
    s.color_available = true;
    s.color = std::clamp(1.0 - (*a.mean_color - *b.mean_color).norm() / std::sqrt(3.0), 0.0, 1.0);
  }
  const double da = a.aabb.diagonal();
  const double db = b.aabb.diagonal();
  const double hi = std::max(da, db);
  s.scale = hi > 0.0 ? std::min(da, db) / hi : 1.0;
  s.iou = aabb_iou(a.aabb.inflated(inflate), b.aabb.inflated(inflate));
  return s;
}

double semantic_similarity(std::span<const double> row_a, std::span<const double> row_b) {
  if (row_a.size() != row_b.size()) {
    throw std::invalid_argument("semantic_similarity: rows differ in length");
  }
  double d2 = 0.0;
  for (std::size_t c = 0; c < row_a.size(); ++c) {
    const double d = row_a[c] - row_b[c];
    d2 += d * d;
  }
  return 1.0 / (1.0 + std::sqrt(d2));
}

ScheduleWeights schedule_weights(std::size_t round, std::size_t n_total) {
  if (n_total == 0) throw std::invalid_argument("schedule: total rounds must be positive");
  if (round > n_total) {
    throw std::invalid_argument(
        fmt::format("schedule: round {} exceeds total rounds {}", round, n_total));
  }
  const double t = static_cast<double>(round) / static_cast<double>(n_total);
  const double decay = 1.0 - t;
  return {decay, decay, decay, t};
}

SegChannel parse_seg_channel(const std::string& name) {
  if (name == "paper") return SegChannel::Literal;
  if (name == "narrative") return SegChannel::Narrative;
  throw InputError(fmt::format("unknown seg channel '{}'; use paper or narrative", name));
}

std::string to_string(SegChannel channel) {
  return channel == SegChannel::Literal ? "paper" : "narrative";
}

double similarity(const ClusterDescriptor& a, const ClusterDescriptor& b,
                  const ScheduleWeights& weights, SegChannel channel, double inflate) {
  const GeometricSimilarity g = geometric_similarities(a, b, inflate);
  const double seg = semantic_similarity(a.semantic_row, b.semantic_row);
  const double m_a = channel == SegChannel::Literal ? seg : g.iou;
  const double m_b = channel == SegChannel::Literal ? g.iou : seg;
  if (g.color_available) {
    return weights.y1 * g.color + weights.y2 * g.scale + weights.y3 * m_a + weights.y4 * m_b;
  }
  const double share = weights.y1 / 3.0;
  return (weights.y2 + share) * g.scale + (weights.y3 + share) * m_a + (weights.y4 + share) * m_b;
}

// ---------------------------------------------------------------------------
// Merging

void MergeConfig::validate() const {
  if (n_total == 0) throw InputError("merge rounds must be positive");
  if (!(cond3 > 0.0)) throw InputError(fmt::format("cond3 must be positive, got {}", cond3));
  if (!(cond4 >= cond3)) {
    throw InputError(fmt::format("cond4 ({}) must not be below cond3 ({})", cond4, cond3));
  }
  if (k_clusters == 0) throw InputError("k_clusters must be positive");
  if (!(inflate >= 0.0)) throw InputError("inflate must be non-negative");
}

std::vector<ClusterDescriptor> merge_round(const std::vector<ClusterDescriptor>& clusters,
                                           const MergeSchedule& schedule,
                                           const MergeConfig& config, RoundStats* stats) {
  config.validate();
  const std::size_t n = clusters.size();
  RoundStats local;
  local.round = schedule.round;
  local.clusters_before = n;
  if (n <= 1) {
    local.clusters_after = n;
    if (stats) *stats = local;
    return clusters;
  }
  const ScheduleWeights weights = schedule.weights();

  std::vector<Vec3> centroids;
  centroids.reserve(n);
  for (const auto& c : clusters) centroids.push_back(c.centroid);
  const Octree tree(centroids, Octree::kDefaultLeafCapacity);
  const std::size_t k_query = std::min(config.k_clusters + 1, n);

  DisjointSets sets(n);
  std::vector<int> dominant(n);
  std::vector<std::map<int, std::size_t>> votes(n);
  for (std::size_t i = 0; i < n; ++i) {
    votes[i] = clusters[i].true_label_votes;
    dominant[i] = clusters[i].dominant_label;
  }

  std::vector<std::size_t> initial(n);
  std::iota(initial.begin(), initial.end(), 0);
  std::stable_sort(initial.begin(), initial.end(), [&](std::size_t a, std::size_t b) {
    const bool la = clusters[a].dominant_label >= 0;
    const bool lb = clusters[b].dominant_label >= 0;
    if (la != lb) return la;
    if (clusters[a].size() != clusters[b].size()) return clusters[a].size() > clusters[b].size();
    return clusters[a].cluster_id < clusters[b].cluster_id;
  });

  std::vector<std::uint8_t> queued(n, 0);
  std::deque<std::size_t> promoted;
  std::size_t cursor = 0;
  while (true) {
    std::size_t probe = 0;
    if (!promoted.empty()) {
      probe = promoted.front();
      promoted.pop_front();
    } else {
      while (cursor < n && queued[initial[cursor]]) ++cursor;
      if (cursor == n) break;
      probe = initial[cursor++];
      queued[probe] = 1;
    }
    ++local.probes;
    for (const auto& nb : tree.knn(clusters[probe].centroid, k_query)) {
      const std::size_t j = nb.index;
      const std::size_t root_p = sets.find(probe);
      const std::size_t root_j = sets.find(j);
      if (root_p == root_j) continue;
      const double s =
          similarity(clusters[probe], clusters[j], weights, schedule.channel, config.inflate);
      if (s < config.cond3) continue;
      if (dominant[root_p] >= 0 && dominant[root_j] >= 0 && dominant[root_p] != dominant[root_j]) {
        ++local.refused;
        continue;
      }
      sets.parent[root_j] = root_p;
      for (const auto& [c, v] : votes[root_j]) votes[root_p][c] += v;
      dominant[root_p] = dominant_of(votes[root_p]);
      ++local.merges;
      if (s >= config.cond4 && !queued[j]) {
        queued[j] = 1;
        promoted.push_back(j);
      }
    }
  }

  // Members fold into their root in ascending index order.
  std::vector<std::optional<ClusterDescriptor>> merged(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = sets.find(i);
    if (!merged[r]) {
      merged[r] = clusters[r];
      if (r == i) continue;
    }
    if (i == r) continue;
    merged[r] = merge_descriptors(*merged[r], clusters[i]);
  }
  std::vector<ClusterDescriptor> out;
  for (auto& m : merged) {
    if (m) out.push_back(std::move(*m));
  }
  std::sort(out.begin(), out.end(), [](const ClusterDescriptor& a, const ClusterDescriptor& b) {
    return a.cluster_id < b.cluster_id;
  });
  local.clusters_after = out.size();
  if (stats) *stats = local;
  return out;
}

LabelMatrix labels_from_clusters(const std::vector<ClusterDescriptor>& clusters,
                                 const LabelMatrix& base, const WeakLabels& weak) {
  LabelMatrix out = base;
  std::fill(out.cluster_id.begin(), out.cluster_id.end(), -1);
  std::fill(out.semantic_label.begin(), out.semantic_label.end(), -1);
  for (const auto& c : clusters) {
    for (std::size_t p : c.point_indices) {
      out.cluster_id[p] = c.cluster_id;
      out.semantic_label[p] = c.dominant_label;
    }
  }
  for (const auto& e : weak.entries) {
    if (out.cluster_id[e.point_index] >= 0) out.semantic_label[e.point_index] = e.class_id;
  }
  return out;
}

MergeResult run_merging(const LabelMatrix& labels, const PointCloud& cloud,
                        const WeakLabels& weak, const SemanticProvider& provider,
                        const MergeConfig& config) {
  config.validate();
  MergeResult result;
  result.clusters = build_descriptors(labels, cloud, weak, provider);
  result.initial_clusters = result.clusters.size();
  for (std::size_t m = 0; m < config.n_total; ++m) {
    MergeSchedule schedule{config.n_total, m, config.channel};
    RoundStats stats;
    result.clusters = merge_round(result.clusters, schedule, config, &stats);
    result.rounds.push_back(stats);
  }
  result.labels = labels_from_clusters(result.clusters, labels, weak);
  return result;
}

}  // namespace wsl3d
