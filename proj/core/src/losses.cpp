#include "wsl3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "wsl3d/cloud.hpp"

namespace wsl3d::loss {
namespace {

void check_mask(const Mask& mask, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(mask.size()) != rows) {
    throw std::invalid_argument(
        fmt::format("mask length {} does not match {} rows", mask.size(), rows));
  }
}

void check_divisor(double divisor) {
  if (!(divisor > 0.0)) {
    throw std::invalid_argument(fmt::format("divisor must be positive, got {}", divisor));
  }
}

double kl_term(double a, double m) { return a > 0.0 ? a * std::log(a / m) : 0.0; }

}  // namespace

bool is_row_stochastic(const Matrix& m, double tolerance) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > tolerance) return false;
  }
  return m.size() == 0 || (m.minCoeff() >= 0.0 && m.maxCoeff() <= 1.0 + tolerance);
}

Matrix softmax_rows(const Matrix& logits) {
  if (!logits.allFinite()) throw std::invalid_argument("softmax_rows: non-finite logits");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - peak).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double masked_cross_entropy(const Matrix& pred, std::span<const int> target, const Mask& mask,
                            double divisor) {
  check_divisor(divisor);
  check_mask(mask, pred.rows());
  if (static_cast<Eigen::Index>(target.size()) != pred.rows()) {
    throw std::invalid_argument("masked_cross_entropy: target length differs from rows");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!mask[i]) continue;
    const int t = target[i];
    if (t < 0 || t >= pred.cols()) {
      throw std::invalid_argument(
          fmt::format("masked_cross_entropy: target {} outside [0, {})", t, pred.cols()));
    }
    sum -= std::log(std::max(pred(i, t), kProbabilityFloor));
  }
  return sum / divisor;
}

double masked_cross_entropy(const Matrix& pred, const Matrix& target, const Mask& mask,
                            double divisor) {
  check_divisor(divisor);
  check_mask(mask, pred.rows());
  if (target.rows() != pred.rows() || target.cols() != pred.cols()) {
    throw std::invalid_argument("masked_cross_entropy: target shape differs from prediction");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!mask[i]) continue;
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      if (target(i, c) != 0.0) sum -= target(i, c) * std::log(std::max(pred(i, c), kProbabilityFloor));
    }
  }
  return sum / divisor;
}

Matrix masked_cross_entropy_gradient(const Matrix& pred, std::span<const int> target,
                                     const Mask& mask, double divisor) {
  check_divisor(divisor);
  check_mask(mask, pred.rows());
  Matrix grad = Matrix::Zero(pred.rows(), pred.cols());
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!mask[i]) continue;
    const int t = target[i];
    if (t < 0 || t >= pred.cols()) throw std::invalid_argument("target class out of range");
    if (pred(i, t) > kProbabilityFloor) grad(i, t) = -1.0 / (divisor * pred(i, t));
  }
  return grad;
}

double js_divergence_row(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("js_divergence: length mismatch");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    const double m = 0.5 * (p[c] + q[c]);
    kl_p += kl_term(p[c], m);
    kl_q += kl_term(q[c], m);
  }
  return 0.5 * (kl_p + kl_q);
}

double js_divergence(const Matrix& p, const Matrix& q, const Mask& common, double divisor) {
  check_divisor(divisor);
  if (p.rows() != q.rows() || p.cols() != q.cols()) {
    throw std::invalid_argument("js_divergence: shape mismatch");
  }
  check_mask(common, p.rows());
  if (!is_row_stochastic(p) || !is_row_stochastic(q)) {
    throw std::invalid_argument("js_divergence: inputs must be row-stochastic");
  }
  // Row-major copies so each row is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pr = p;
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> qr = q;
  const auto cols = static_cast<std::size_t>(p.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    if (!common[i]) continue;
    sum += js_divergence_row({pr.data() + i * p.cols(), cols}, {qr.data() + i * q.cols(), cols});
  }
  return sum / divisor;
}

AttentionOutput attention_redistribute(const Matrix& enc, const Matrix& w1, const Matrix& w2) {
  if (w1.rows() != enc.cols() || w2.rows() != enc.cols() || w1.cols() != w2.cols()) {
    throw std::invalid_argument(fmt::format(
        "attention_redistribute: enc is {}x{}, w1 {}x{}, w2 {}x{}", enc.rows(), enc.cols(),
        w1.rows(), w1.cols(), w2.rows(), w2.cols()));
  }
  const Matrix mid1 = enc * w1;
  const Matrix mid2 = enc * w2;
  AttentionOutput out;
  out.scores = softmax_rows(mid1 * mid2.transpose());
  out.redistributed = out.scores * enc;
  return out;
}

double dice_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument(
        fmt::format("dice_loss: lengths {} and {} differ", pred.size(), gt.size()));
  }
  double inter = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * gt[i];
    denom += pred[i] * pred[i] + gt[i] * gt[i];
  }
  if (denom == 0.0) return 0.0;
  return 1.0 - 2.0 * inter / denom;
}

Vector dice_loss_gradient(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("dice_loss_gradient: length mismatch");
  double inter = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * gt[i];
    denom += pred[i] * pred[i] + gt[i] * gt[i];
  }
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(pred.size()));
  if (denom == 0.0) return grad;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    grad[static_cast<Eigen::Index>(i)] =
        -2.0 * (gt[i] * denom - 2.0 * pred[i] * inter) / (denom * denom);
  }
  return grad;
}

double total_segmentation_loss(const SegmentationLosses& parts) {
  const double terms[] = {parts.scene_class,       parts.cluster,   parts.augmentation_js,
                          parts.reconstruction_js, parts.attention, parts.pseudo_label};
  double sum = 0.0;
  for (double t : terms) {
    if (!std::isfinite(t)) throw std::invalid_argument("segmentation loss term is not finite");
    sum += t;
  }
  return sum;
}

double total_detection_loss(double segmentation_total, double dice) {
  if (!std::isfinite(segmentation_total) || !std::isfinite(dice)) {
    throw std::invalid_argument("detection loss term is not finite");
  }
  return segmentation_total + dice;
}

double directional_derivative(const Matrix& gradient, const Matrix& direction) {
  if (gradient.rows() != direction.rows() || gradient.cols() != direction.cols()) {
    throw std::invalid_argument("directional_derivative: shape mismatch");
  }
  return gradient.cwiseProduct(direction).sum();
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
    throw InputError(fmt::format("{}: expected header 'rows cols'", path.string()));
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> m(i, j))) {
        throw InputError(fmt::format("{}: expected {} values, ran out at row {} col {}",
                                     path.string(), rows * cols, i, j));
      }
    }
  }
  double extra = 0.0;
  if (in >> extra) {
    throw InputError(fmt::format("{}: more than {} values", path.string(), rows * cols));
  }
  return m;
}

void write_matrix(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << fmt::format("{:.17g}", m(i, j)) << (j + 1 < m.cols() ? ' ' : '\n');
    }
  }
}

}  // namespace wsl3d::loss
