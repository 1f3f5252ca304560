#pragma once

// Deterministic synthetic scenes with ground truth, used by tests,
// benchmarks and the `synth` CLI subcommand.

#include <cstdint>
#include <vector>

#include "wsl3d/cloud.hpp"

namespace wsl3d {

struct SyntheticScene {
  PointCloud cloud;
  std::vector<int> gt_semantic;
  std::vector<int> gt_instance;
  WeakLabels weak;
  int num_classes = 0;
};

/// Two planes meeting at a right angle along a shared edge: z = 0 for
/// x in [0, length] and x = 0 for z in (0, length], both spanning
/// y in [0, width]. Instance and class are 0 / 1. No weak labels.
/// `total_points` is split evenly between the planes.
SyntheticScene perpendicular_planes(std::size_t total_points = 20000, double spacing = 0.02,
                                    std::uint64_t seed = 7);

/// One z = 0 plane cut into a 2x2 grid of tiles separated by `gap`, all with
/// the same color. gt_instance holds the tile index, which also serves as an
/// initial clustering. Class 0 everywhere.
SyntheticScene split_plane_tiles(std::size_t points_per_side = 20, double spacing = 0.05,
                                 double gap = 0.04);

/// Room corner: floor, two walls, two boxes resting on the floor. Classes:
/// 0 wall, 1 floor, 2 and 3 the boxes. Instances: 0 floor, 1 and 2 walls,
/// 3 and 4 boxes. `labels_per_object` weak labels are drawn per instance.
SyntheticScene synthetic_room(double spacing = 0.028, std::size_t labels_per_object = 4,
                              std::uint64_t seed = 11);

/// LabelMatrix with cluster ids taken from `instances` and no semantics.
LabelMatrix labels_from_instances(const std::vector<int>& instances);

}  // namespace wsl3d
