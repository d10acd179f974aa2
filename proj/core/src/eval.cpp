#include "pluforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pluforge {

std::vector<double> default_map_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
    return t;
}

namespace {

struct IouPair {
    size_t pred, gt;
    double iou;
};

std::vector<std::vector<double>> iou_table(const Scene& preds, const Scene& gts) {
    std::vector<std::vector<double>> t(preds.instances.size(),
                                       std::vector<double>(gts.instances.size(), 0.0));
    for (size_t i = 0; i < preds.instances.size(); ++i)
        for (size_t j = 0; j < gts.instances.size(); ++j)
            t[i][j] = mask_iou(preds.instances[i], gts.instances[j]);
    return t;
}

// One-to-one matching by globally descending IoU, cut off at `thr`.
std::vector<IouPair> greedy_match(const std::vector<std::vector<double>>& ious, double thr) {
    std::vector<IouPair> all;
    for (size_t i = 0; i < ious.size(); ++i)
        for (size_t j = 0; j < (ious.empty() ? 0 : ious[i].size()); ++j)
            if (ious[i][j] >= thr && ious[i][j] > 0.0) all.push_back({i, j, ious[i][j]});
    std::sort(all.begin(), all.end(), [](const IouPair& a, const IouPair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });
    std::vector<bool> pu(ious.size(), false);
    std::vector<bool> gu(ious.empty() ? 0 : ious[0].size(), false);
    std::vector<IouPair> matched;
    for (const auto& p : all) {
        if (pu[p.pred] || gu[p.gt]) continue;
        pu[p.pred] = true;
        gu[p.gt] = true;
        matched.push_back(p);
    }
    return matched;
}

}  // namespace

double dice(const Scene& preds, const Scene& gts) {
    if (preds.instances.empty() && gts.instances.empty())
        throw std::invalid_argument("dice: both scenes empty");
    auto ious = iou_table(preds, gts);
    auto matched = greedy_match(ious, 0.5);
    double sum = 0.0;
    for (const auto& m : matched) {
        const auto& a = preds.instances[m.pred];
        const auto& b = gts.instances[m.gt];
        uint64_t inter = mask_intersection(a, b);
        sum += 2.0 * static_cast<double>(inter) /
               static_cast<double>(a.area() + b.area());
    }
    return sum / static_cast<double>(std::max(preds.instances.size(), gts.instances.size()));
}

double f1_at_iou(const Scene& preds, const Scene& gts, double iou_thr) {
    if (preds.instances.empty() && gts.instances.empty()) return 1.0;
    auto matched = greedy_match(iou_table(preds, gts), iou_thr);
    double tp = static_cast<double>(matched.size());
    double fp = static_cast<double>(preds.instances.size()) - tp;
    double fn = static_cast<double>(gts.instances.size()) - tp;
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

MapResult map_masks(const Scene& preds, const std::vector<double>& scores, const Scene& gts,
                    const std::vector<double>& thresholds) {
    if (scores.size() != preds.instances.size())
        throw std::invalid_argument("map_masks: scores size mismatch");
    auto ious = iou_table(preds, gts);

    std::vector<size_t> order(preds.instances.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });

    MapResult result;
    const size_t n_gt = gts.instances.size();
    for (double thr : thresholds) {
        double ap;
        if (n_gt == 0) {
            ap = preds.instances.empty() ? 1.0 : 0.0;
        } else {
            std::vector<bool> gt_used(n_gt, false);
            std::vector<int> is_tp;
            for (size_t p : order) {
                double best = 0.0;
                int best_j = -1;
                for (size_t j = 0; j < n_gt; ++j) {
                    if (gt_used[j]) continue;
                    if (ious[p][j] >= thr && ious[p][j] > best) {
                        best = ious[p][j];
                        best_j = static_cast<int>(j);
                    }
                }
                if (best_j >= 0) {
                    gt_used[best_j] = true;
                    is_tp.push_back(1);
                } else {
                    is_tp.push_back(0);
                }
            }
            // All-point interpolation: integrate the running-max precision
            // envelope over recall.
            std::vector<double> precision, recall;
            double tp = 0.0;
            for (size_t k = 0; k < is_tp.size(); ++k) {
                tp += is_tp[k];
                precision.push_back(tp / static_cast<double>(k + 1));
                recall.push_back(tp / static_cast<double>(n_gt));
            }
            for (size_t k = precision.size(); k-- > 1;)
                precision[k - 1] = std::max(precision[k - 1], precision[k]);
            ap = 0.0;
            double prev_r = 0.0;
            for (size_t k = 0; k < recall.size(); ++k) {
                ap += (recall[k] - prev_r) * precision[k];
                prev_r = recall[k];
            }
        }
        result.ap_table.emplace_back(thr, ap);
        result.map += ap;
    }
    result.map /= static_cast<double>(thresholds.size());
    return result;
}

double aji(const Scene& preds, const Scene& gts) {
    if (preds.instances.empty() && gts.instances.empty()) return 1.0;
    auto ious = iou_table(preds, gts);
    auto matched = greedy_match(ious, 0.0);
    std::vector<bool> pred_used(preds.instances.size(), false);
    std::vector<bool> gt_used(gts.instances.size(), false);
    uint64_t inter_sum = 0, union_sum = 0;
    for (const auto& m : matched) {
        pred_used[m.pred] = true;
        gt_used[m.gt] = true;
        uint64_t inter = mask_intersection(preds.instances[m.pred], gts.instances[m.gt]);
        inter_sum += inter;
        union_sum += preds.instances[m.pred].area() + gts.instances[m.gt].area() - inter;
    }
    uint64_t extra = 0;
    for (size_t i = 0; i < preds.instances.size(); ++i)
        if (!pred_used[i]) extra += preds.instances[i].area();
    for (size_t j = 0; j < gts.instances.size(); ++j)
        if (!gt_used[j]) extra += gts.instances[j].area();
    if (union_sum + extra == 0) return 0.0;
    return static_cast<double>(inter_sum) / static_cast<double>(union_sum + extra);
}

MetricReport evaluate(const Scene& preds, const std::vector<double>& scores, const Scene& gts) {
    MetricReport r;
    auto m = map_masks(preds, scores, gts);
    r.map = m.map;
    r.ap_table = std::move(m.ap_table);
    r.f1 = f1_at_iou(preds, gts);
    r.dice = (preds.instances.empty() && gts.instances.empty()) ? 1.0 : dice(preds, gts);
    r.aji = aji(preds, gts);
    return r;
}

double delta_pm(const MetricReport& before, const MetricReport& after) {
    return (after.map - before.map) + (after.f1 - before.f1) + (after.dice - before.dice) +
           (after.aji - before.aji);
}

Scene filter_severe_overlap(const Scene& gts) {
    std::vector<bool> flags =
        gts.severe_overlap_flags ? *gts.severe_overlap_flags : severe_overlap_flags(gts);
    Scene out;
    out.image_path = gts.image_path;
    out.width = gts.width;
    out.height = gts.height;
    for (size_t i = 0; i < gts.instances.size(); ++i)
        if (flags[i]) out.instances.push_back(gts.instances[i]);
    out.severe_overlap_flags = std::vector<bool>(out.instances.size(), true);
    return out;
}

}  // namespace pluforge
