#pragma once

#include <array>
#include <vector>

#include "pluforge/masks.hpp"

namespace pluforge {

/// Clamp floor for all log arguments in the loss library.
inline constexpr double kProbEps = 1e-7;

struct LossWeights {
    double alpha_ocls = 1.0;
    double beta_count = 1.0;
    double gamma_iou = 1.0;
    double lambda_ssl = 1.0;
};

struct FocalParams {
    double alpha = 0.25;
    double gamma = 2.0;
};

struct Assignment {
    std::vector<std::pair<size_t, size_t>> pairs;  // (row, col), sorted by row
    double total_cost = 0.0;
};

/// The six named components of the supervised total.
struct SlComponents {
    double cls = 0.0;
    double reg = 0.0;
    double seg = 0.0;
    double o_cls = 0.0;
    double i_count = 0.0;
    double i_iou = 0.0;
};

// Proposal classification: -alpha * (1-p)^gamma * log(p).
double focal_loss(double p_t, const FocalParams& params);

// Box regression over the four offsets.
double smooth_l1(const std::array<double, 4>& t, const std::array<double, 4>& v);

// Per-pixel two-class cross-entropy; probs holds the foreground probability.
double seg_cross_entropy(const std::vector<uint8_t>& target_bitmap,
                         const std::vector<double>& probs);

double binary_cross_entropy(const std::vector<int>& y, const std::vector<double>& p);

// Instance-count loss: per-slot BCE against existence targets
// [1]*k + [0]*(K-k). `printed_form` switches to the uniform-weight variant
// -(1/K) sum [k log e + (K-k) log(1-e)] for comparison.
double count_bce(size_t k, const std::vector<double>& existence_probs,
                 bool printed_form = false);

/// Minimum-cost assignment of min(rows, cols) pairs. Among optimal
/// assignments, returns the lexicographically smallest pair sequence.
Assignment hungarian_match(const std::vector<std::vector<double>>& cost);

/// Mean over GT masks of (1 - IoU) under Hungarian matching with cost
/// 1 - IoU; GT masks left unmatched (|pred| < |gt|) contribute the maximal
/// penalty 1.
double decomposition_iou_loss(const std::vector<InstanceMask>& pred_masks,
                              const std::vector<InstanceMask>& gt_masks);

double total_sl_loss(const SlComponents& c, const LossWeights& w);

double total_sassl_loss(double l_real, double l_pseudo, double l_synthetic,
                        const LossWeights& w);

}  // namespace pluforge
