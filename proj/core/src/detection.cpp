#include "wsl3d/detection.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace wsl3d {

std::vector<Box3D> instance_boxes(const LabelMatrix& labels, const PointCloud& cloud,
                                  const BoxFilter& filter) {
  if (labels.size() != cloud.size()) {
    throw std::invalid_argument("instance_boxes: label and cloud sizes differ");
  }
  std::map<int, Box3D> by_cluster;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels.cluster_id[i];
    if (c < 0) continue;
    auto [it, fresh] = by_cluster.try_emplace(c);
    Box3D& box = it->second;
    if (fresh) {
      box.bounds = Aabb::of_point(cloud.points[i]);
      box.instance_id = c;
    } else {
      box.bounds.extend(cloud.points[i]);
    }
    ++box.point_count;
  }
  // A cluster's class is the semantic label its points carry; weakly labeled
  // points may differ from their cluster, so take the majority.
  std::map<int, std::map<int, std::size_t>> votes;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.cluster_id[i] >= 0) ++votes[labels.cluster_id[i]][labels.semantic_label[i]];
  }
  std::vector<Box3D> out;
  for (auto& [id, box] : by_cluster) {
    int best = -1;
    std::size_t best_votes = 0;
    for (const auto& [cls, v] : votes[id]) {
      if (v > best_votes) {
        best = cls;
        best_votes = v;
      }
    }
    box.class_id = best;
    if (box.class_id < 0 || filter.exclude_classes.count(box.class_id) ||
        box.point_count < filter.min_points) {
      continue;
    }
    out.push_back(box);
  }
  return out;
}

double box_iou(const Box3D& a, const Box3D& b) { return aabb_iou(a.bounds, b.bounds); }

std::vector<int> scene_presence_target(std::span<const Box3D> boxes, int num_classes) {
  std::vector<int> present(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (const auto& b : boxes) {
    if (b.class_id >= 0 && b.class_id < num_classes) present[b.class_id] = 1;
  }
  return present;
}

std::vector<int> scene_presence_target(const LabelMatrix& labels, int num_classes) {
  std::vector<int> present(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (int c : labels.semantic_label) {
    if (c >= 0 && c < num_classes) present[c] = 1;
  }
  return present;
}

std::string boxes_to_json(std::span<const Box3D> boxes) {
  std::vector<const Box3D*> sorted;
  for (const auto& b : boxes) sorted.push_back(&b);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Box3D* a, const Box3D* b) { return a->instance_id < b->instance_id; });
  if (sorted.empty()) return "[]\n";
  std::string out = "[\n";
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Box3D& b = *sorted[i];
    fmt::format_to(std::back_inserter(out),
                   "  {{\"instance_id\": {}, \"class_id\": {}, \"min\": [{:.6f}, {:.6f}, {:.6f}], "
                   "\"max\": [{:.6f}, {:.6f}, {:.6f}], \"points\": {}}}{}\n",
                   b.instance_id, b.class_id, b.bounds.min.x(), b.bounds.min.y(),
                   b.bounds.min.z(), b.bounds.max.x(), b.bounds.max.y(), b.bounds.max.z(),
                   b.point_count, i + 1 < sorted.size() ? "," : "");
  }
  out += "]\n";
  return out;
}

void export_boxes(std::span<const Box3D> boxes, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << boxes_to_json(boxes);
  if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

std::vector<ScoredBox> load_boxes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_array()) throw InputError(fmt::format("{}: expected a JSON array", path.string()));
  std::vector<ScoredBox> out;
  bool all_scored = true;
  try {
    for (const auto& item : doc) {
      ScoredBox s;
      s.box.instance_id = item.at("instance_id").get<int>();
      s.box.class_id = item.at("class_id").get<int>();
      const auto lo = item.at("min").get<std::vector<double>>();
      const auto hi = item.at("max").get<std::vector<double>>();
      if (lo.size() != 3 || hi.size() != 3) throw InputError("min/max must have 3 values");
      s.box.bounds = {Vec3(lo[0], lo[1], lo[2]), Vec3(hi[0], hi[1], hi[2])};
      s.box.point_count = item.at("points").get<std::size_t>();
      if (item.contains("confidence")) {
        s.confidence = item.at("confidence").get<double>();
      } else {
        all_scored = false;
      }
      out.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!all_scored) {
    std::vector<Box3D> plain;
    for (const auto& s : out) plain.push_back(s.box);
    return score_by_point_count(plain);
  }
  return out;
}

std::vector<ScoredBox> score_by_point_count(std::span<const Box3D> boxes) {
  std::size_t largest = 0;
  for (const auto& b : boxes) largest = std::max(largest, b.point_count);
  std::vector<ScoredBox> out;
  for (const auto& b : boxes) {
    out.push_back({b, largest > 0 ? static_cast<double>(b.point_count) / largest : 1.0});
  }
  return out;
}

}  // namespace wsl3d
