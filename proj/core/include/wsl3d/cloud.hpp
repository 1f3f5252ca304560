#pragma once

// Point cloud, weak label and label matrix types plus every on-disk format
// the pipeline reads or writes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wsl3d {

using Vec3 = Eigen::Vector3d;

/// Raised for malformed or inconsistent input data. The CLI maps it to exit
/// status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointCloud {
  std::vector<Vec3> points;
  /// Empty, or aligned with `points`; channels in [0,1].
  std::vector<Vec3> colors;
  std::string scene_id;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }
  [[nodiscard]] bool has_colors() const noexcept { return !colors.empty(); }

  /// Throws InputError when colors are misaligned or a coordinate is not
  /// finite.
  void validate() const;
};

struct WeakLabel {
  std::size_t point_index = 0;
  int class_id = 0;
};

struct WeakLabels {
  std::vector<WeakLabel> entries;
  int num_classes = 0;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries.empty(); }

  /// Uniqueness and class range. Throws InputError.
  void validate() const;
  /// Index range against a cloud of `num_points`. Throws InputError.
  void check_against(std::size_t num_points) const;
};

/// Per-point clustering result. -1 is the unassigned / unlabeled sentinel in
/// every column so million-point scenes stay densely packed.
struct LabelMatrix {
  std::vector<int> cluster_id;
  std::vector<int> semantic_label;
  /// Index of the seed that admitted the point; -1 for seeds and unassigned
  /// points.
  std::vector<std::int64_t> provenance;

  LabelMatrix() = default;
  explicit LabelMatrix(std::size_t n)
      : cluster_id(n, -1), semantic_label(n, -1), provenance(n, -1) {}

  [[nodiscard]] std::size_t size() const noexcept { return cluster_id.size(); }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;
};

enum class CloudFormat { PlyAscii, PlyBinaryLE, Xyz, XyzRgb };

enum class LabelOutput { LabelsText, ColoredPly };

/// Parses "ply-ascii", "ply-binary-le", "xyz" or "xyzrgb".
CloudFormat parse_cloud_format(const std::string& name);
std::string to_string(CloudFormat format);

/// Guesses the format from the extension, and for .ply from the header.
CloudFormat detect_cloud_format(const std::filesystem::path& path);

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path);

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format);

/// Format: header line `classes <C>`, then `point_index class_id` per line.
/// Blank lines and lines starting with '#' are ignored.
WeakLabels load_weak_labels(const std::filesystem::path& path);
void save_weak_labels(const WeakLabels& weak, const std::filesystem::path& path);

void write_labeled_cloud(const PointCloud& cloud, const LabelMatrix& labels,
                         const std::filesystem::path& path, LabelOutput mode);

/// Reads a labels-text file (`cluster_id semantic_label` per line).
LabelMatrix read_labels_text(const std::filesystem::path& path);

/// Reads per-point semantic labels from a file with either one column
/// (semantic label) or two columns (cluster id, semantic label).
std::vector<int> read_semantic_labels(const std::filesystem::path& path);

/// Deterministic display color for a semantic label; -1 maps to gray.
std::array<std::uint8_t, 3> palette_color(int semantic_label);

}  // namespace wsl3d
