#pragma once

// Pseudo ground-truth boxes for detection: one tight axis-aligned box per
// labeled instance cluster.

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "wsl3d/aabb.hpp"
#include "wsl3d/cloud.hpp"

namespace wsl3d {

struct Box3D {
  Aabb bounds;
  int class_id = -1;
  int instance_id = -1;
  std::size_t point_count = 0;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct BoxFilter {
  std::size_t min_points = 50;
  /// Background classes (wall and floor in the default 0/1 numbering).
  std::set<int> exclude_classes{0, 1};
};

/// Boxes ordered by instance id (the cluster id).
std::vector<Box3D> instance_boxes(const LabelMatrix& labels, const PointCloud& cloud,
                                  const BoxFilter& filter = {});

/// Volume IoU; zero-volume boxes score 1 only against an identical box.
double box_iou(const Box3D& a, const Box3D& b);

/// 1 for every class with at least one box.
std::vector<int> scene_presence_target(std::span<const Box3D> boxes, int num_classes);
/// 1 for every class carried by at least one point.
std::vector<int> scene_presence_target(const LabelMatrix& labels, int num_classes);

/// JSON array of {instance_id, class_id, min, max, points}, ordered by
/// instance id, coordinates with 6 decimals.
std::string boxes_to_json(std::span<const Box3D> boxes);
void export_boxes(std::span<const Box3D> boxes, const std::filesystem::path& path);

struct ScoredBox {
  Box3D box;
  double confidence = 1.0;
};

/// Reads an exported box file. An optional "confidence" field is honored;
/// missing confidences default to point_count / max point_count.
std::vector<ScoredBox> load_boxes(const std::filesystem::path& path);

/// Confidence = point_count / largest point_count.
std::vector<ScoredBox> score_by_point_count(std::span<const Box3D> boxes);

}  // namespace wsl3d
