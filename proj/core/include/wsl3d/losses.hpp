#pragma once

// Loss kernels over class-probability matrices (rows = items, cols = classes).
// Natural logarithms throughout; probabilities are clamped at kProbabilityFloor
// before taking logs.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace wsl3d::loss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Per-row indicator in {0, 1}.
using Mask = std::vector<std::uint8_t>;

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kRowSumTolerance = 1e-9;

/// True when every row sums to 1 within kRowSumTolerance and entries lie in
/// [0, 1].
bool is_row_stochastic(const Matrix& m, double tolerance = kRowSumTolerance);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// -(1/divisor) * sum over masked rows of log pred(i, target_i).
/// Throws std::invalid_argument on shape mismatch, out-of-range target or a
/// non-positive divisor.
double masked_cross_entropy(const Matrix& pred, std::span<const int> target, const Mask& mask,
                            double divisor);

/// Soft-target variant: -(1/divisor) * sum_i mask_i * sum_c t(i,c) log pred(i,c).
double masked_cross_entropy(const Matrix& pred, const Matrix& target, const Mask& mask,
                            double divisor);

/// d(masked_cross_entropy)/d(pred); zero where the clamp is active.
Matrix masked_cross_entropy_gradient(const Matrix& pred, std::span<const int> target,
                                     const Mask& mask, double divisor);

/// Jensen-Shannon divergence of one pair of distributions.
double js_divergence_row(std::span<const double> p, std::span<const double> q);

/// (1/divisor) * sum over masked rows of JS(p_i || q_i). Both inputs must be
/// row-stochastic.
double js_divergence(const Matrix& p, const Matrix& q, const Mask& common, double divisor);

struct AttentionOutput {
  Matrix redistributed;  // N_enc x C_enc
  Matrix scores;         // N_enc x N_enc, row-stochastic
};

/// scores = softmax_rows((enc * w1) * (enc * w2)^T), redistributed = scores * enc.
AttentionOutput attention_redistribute(const Matrix& enc, const Matrix& w1, const Matrix& w2);

/// 1 - 2 sum(pred * gt) / (sum(pred^2) + sum(gt^2)); 0 when both are zero.
double dice_loss(std::span<const double> pred, std::span<const double> gt);
Vector dice_loss_gradient(std::span<const double> pred, std::span<const double> gt);

struct SegmentationLosses {
  double scene_class = 0.0;      // L_Cls
  double cluster = 0.0;          // L_Clus
  double augmentation_js = 0.0;  // L^js_Aug
  double reconstruction_js = 0.0;
  double attention = 0.0;  // L_Att
  double pseudo_label = 0.0;  // L_WSL
};

/// Plain sum of the six segmentation terms. Throws on a non-finite term.
double total_segmentation_loss(const SegmentationLosses& parts);

/// Detection total: second segmentation total plus the Dice term.
double total_detection_loss(double segmentation_total, double dice);

/// <gradient, direction> summed over all entries.
double directional_derivative(const Matrix& gradient, const Matrix& direction);

/// Text matrix file: header `rows cols`, then row-major values.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const Matrix& m, const std::filesystem::path& path);

}  // namespace wsl3d::loss
