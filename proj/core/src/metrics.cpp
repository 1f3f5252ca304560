#include "wsl3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

namespace wsl3d {

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : classes_(num_classes),
      counts_(static_cast<std::size_t>(std::max(num_classes, 0)) * std::max(num_classes, 0), 0),
      missed_(static_cast<std::size_t>(std::max(num_classes, 0)), 0) {
  if (num_classes <= 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int gt, int pred) {
  if (gt < 0) return;
  if (gt >= classes_) {
    throw std::invalid_argument(fmt::format("ground-truth class {} outside [0, {})", gt, classes_));
  }
  if (pred < 0 || pred >= classes_) {
    ++missed_[gt];
  } else {
    ++counts_[static_cast<std::size_t>(gt) * classes_ + pred];
  }
  ++total_;
}

std::uint64_t ConfusionMatrix::false_positives(int c) const {
  std::uint64_t fp = 0;
  for (int g = 0; g < classes_; ++g) {
    if (g != c) fp += count(g, c);
  }
  return fp;
}

std::uint64_t ConfusionMatrix::false_negatives(int c) const {
  return gt_count(c) - true_positives(c);
}

std::uint64_t ConfusionMatrix::gt_count(int c) const {
  std::uint64_t n = missed_[c];
  for (int p = 0; p < classes_; ++p) n += count(c, p);
  return n;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> gt, int num_classes) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument(
        fmt::format("prediction length {} differs from ground truth {}", pred.size(), gt.size()));
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < pred.size(); ++i) cm.add(gt[i], pred[i]);
  return cm;
}

IouReport miou(std::span<const int> pred, std::span<const int> gt, int num_classes) {
  const ConfusionMatrix cm = confusion(pred, gt, num_classes);
  IouReport report;
  report.per_class.resize(static_cast<std::size_t>(num_classes));
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const auto tp = cm.true_positives(c);
    const auto denom = tp + cm.false_positives(c) + cm.false_negatives(c);
    if (denom > 0) report.per_class[c] = static_cast<double>(tp) / static_cast<double>(denom);
    if (cm.gt_count(c) > 0) {
      sum += *report.per_class[c];
      ++present;
    }
  }
  if (present > 0) report.mean = sum / present;
  return report;
}

ApReport average_precision(std::span<const ScoredBox> predictions, std::span<const Box3D> gt,
                           double iou_threshold) {
  for (const auto& p : predictions) {
    if (!std::isfinite(p.confidence)) throw std::invalid_argument("non-finite confidence");
  }
  std::set<int> classes;
  for (const auto& g : gt) classes.insert(g.class_id);

  ApReport report;
  for (int cls : classes) {
    std::vector<std::size_t> gt_idx;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (gt[i].class_id == cls) gt_idx.push_back(i);
    }
    std::vector<std::size_t> pred_idx;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (predictions[i].box.class_id == cls) pred_idx.push_back(i);
    }
    std::stable_sort(pred_idx.begin(), pred_idx.end(), [&](std::size_t a, std::size_t b) {
      return predictions[a].confidence > predictions[b].confidence;
    });

    std::vector<std::uint8_t> matched(gt_idx.size(), 0);
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t p : pred_idx) {
      double best = -1.0;
      std::size_t best_g = gt_idx.size();
      for (std::size_t g = 0; g < gt_idx.size(); ++g) {
        if (matched[g]) continue;
        const double iou = box_iou(predictions[p].box, gt[gt_idx[g]]);
        if (iou >= iou_threshold && iou > best) {
          best = iou;
          best_g = g;
        }
      }
      if (best_g < gt_idx.size()) {
        matched[best_g] = 1;
        ++tp;
      } else {
        ++fp;
      }
      precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_idx.size()));
    }
    // All-point interpolation: precision envelope, summed over recall steps.
    for (std::size_t i = precision.size(); i-- > 1;) {
      precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
    report.per_class[cls] = ap;
  }
  if (!report.per_class.empty()) {
    double sum = 0.0;
    for (const auto& [c, ap] : report.per_class) sum += ap;
    report.mean = sum / static_cast<double>(report.per_class.size());
  }
  return report;
}

}  // namespace wsl3d
