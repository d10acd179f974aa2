#pragma once

#include <vector>

#include "pluforge/masks.hpp"

namespace pluforge {

struct MetricReport {
    double map = 0.0;
    double f1 = 0.0;
    double dice = 0.0;
    double aji = 0.0;
    std::vector<std::pair<double, double>> ap_table;  // (iou threshold, AP)
};

/// COCO-style mask IoU thresholds 0.50:0.95:0.05.
std::vector<double> default_map_thresholds();

/// Greedy one-to-one matching at IoU >= 0.5; mean per-pair Dice over
/// max(|preds|, |gts|) so unmatched instances count as zero.
double dice(const Scene& preds, const Scene& gts);

double f1_at_iou(const Scene& preds, const Scene& gts, double iou_thr = 0.5);

struct MapResult {
    double map = 0.0;
    std::vector<std::pair<double, double>> ap_table;
};

/// Single-class mask AP with all-point interpolation; scores parallel to
/// preds.instances.
MapResult map_masks(const Scene& preds, const std::vector<double>& scores, const Scene& gts,
                    const std::vector<double>& thresholds = default_map_thresholds());

/// Aggregated Jaccard index, one-use predictions, greedy over GT in
/// descending best-IoU order.
double aji(const Scene& preds, const Scene& gts);

MetricReport evaluate(const Scene& preds, const std::vector<double>& scores, const Scene& gts);

/// Sum over {map, f1, dice, aji} of (after - before).
double delta_pm(const MetricReport& before, const MetricReport& after);

/// Keep only GT instances flagged severely overlapping (recomputing flags
/// when absent); used by the eval CLI's --subset severe-overlap.
Scene filter_severe_overlap(const Scene& gts);

}  // namespace pluforge
