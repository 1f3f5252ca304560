#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wsl3d/detection.hpp"

namespace wsl3d {

/// Rows are ground-truth classes, columns predicted classes. Points whose
/// ground truth is -1 are ignored; points predicted -1 (or out of range) are
/// counted as misses of their ground-truth class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void add(int gt, int pred);

  [[nodiscard]] int num_classes() const noexcept { return classes_; }
  [[nodiscard]] std::uint64_t count(int gt, int pred) const {
    return counts_[static_cast<std::size_t>(gt) * classes_ + pred];
  }
  [[nodiscard]] std::uint64_t missed(int gt) const { return missed_[gt]; }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
  [[nodiscard]] std::uint64_t true_positives(int c) const { return count(c, c); }
  [[nodiscard]] std::uint64_t false_positives(int c) const;
  [[nodiscard]] std::uint64_t false_negatives(int c) const;
  [[nodiscard]] std::uint64_t gt_count(int c) const;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> missed_;
  std::uint64_t total_ = 0;
};

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, int num_classes);

struct IouReport {
  /// TP / (TP + FP + FN); empty when the class never occurs in either input.
  std::vector<std::optional<double>> per_class;
  /// Mean over classes present in the ground truth; empty when there are none.
  std::optional<double> mean;
};

/// Throws std::invalid_argument on a length mismatch.
IouReport miou(std::span<const int> pred, std::span<const int> gt, int num_classes);

struct ApReport {
  /// Classes present in the ground truth.
  std::map<int, double> per_class;
  std::optional<double> mean;
};

/// Greedy matching per class in descending confidence; each prediction takes
/// the unmatched ground-truth box with the highest IoU at or above the
/// threshold. Precision is integrated over recall with all-point
/// interpolation.
ApReport average_precision(std::span<const ScoredBox> predictions, std::span<const Box3D> gt,
                           double iou_threshold = 0.5);

}  // namespace wsl3d
