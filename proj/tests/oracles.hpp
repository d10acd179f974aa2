// Independent reference implementations used only by tests. Everything here
// is deliberately naive (bitmaps, exhaustive permutations, two-pass sums) so
// it cannot share bugs with the library's run-length / LAP-solver code paths.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "pluforge/losses.hpp"
#include "pluforge/masks.hpp"

namespace oracle {

inline std::vector<uint8_t> bitmap(const pluforge::InstanceMask& m) { return m.to_bitmap(); }

inline double iou_bitmap(const pluforge::InstanceMask& a, const pluforge::InstanceMask& b) {
    auto ba = bitmap(a), bb = bitmap(b);
    uint64_t inter = 0, uni = 0;
    for (size_t i = 0; i < ba.size(); ++i) {
        inter += ba[i] && bb[i];
        uni += ba[i] || bb[i];
    }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

inline uint64_t inter_bitmap(const pluforge::InstanceMask& a, const pluforge::InstanceMask& b) {
    auto ba = bitmap(a), bb = bitmap(b);
    uint64_t inter = 0;
    for (size_t i = 0; i < ba.size(); ++i) inter += ba[i] && bb[i];
    return inter;
}

// Exhaustive minimum-cost assignment on an n x n matrix, returning the
// lexicographically smallest optimal column permutation.
inline std::pair<double, std::vector<size_t>> brute_assignment(
    const std::vector<std::vector<double>>& cost) {
    const size_t n = cost.size();
    std::vector<size_t> perm(n), best;
    std::iota(perm.begin(), perm.end(), 0);
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double t = 0;
        for (size_t i = 0; i < n; ++i) t += cost[i][perm[i]];
        if (best.empty() || t < best_total - 1e-12 * std::max(1.0, std::abs(best_total))) {
            best_total = t;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best_total, best};
}

inline double clampp(double p) {
    return std::clamp(p, pluforge::kProbEps, 1.0 - pluforge::kProbEps);
}

inline double ref_focal(double p_t, double alpha, double gamma) {
    double p = clampp(p_t);
    return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
}

inline double ref_smooth_l1(const std::array<double, 4>& t, const std::array<double, 4>& v) {
    double s = 0;
    for (int i = 0; i < 4; ++i) {
        double d = std::abs(t[i] - v[i]);
        s += d < 1.0 ? 0.5 * d * d : d - 0.5;
    }
    return s;
}

inline double ref_bce(const std::vector<int>& y, const std::vector<double>& p) {
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) {
        double q = clampp(p[i]);
        s += y[i] ? -std::log(q) : -std::log(1.0 - q);
    }
    return s / double(y.size());
}

inline double ref_seg_ce(const std::vector<uint8_t>& target, const std::vector<double>& probs) {
    std::vector<int> y(target.begin(), target.end());
    return ref_bce(y, probs);
}

inline double ref_count_bce(size_t k, const std::vector<double>& e, bool printed) {
    const size_t K = e.size();
    if (printed) {
        double s = 0;
        for (size_t i = 0; i < K; ++i)
            s += double(k) * std::log(clampp(e[i])) +
                 double(K - k) * std::log(1.0 - clampp(e[i]));
        return -s / double(K);
    }
    std::vector<int> y(K, 0);
    for (size_t i = 0; i < k; ++i) y[i] = 1;
    return ref_bce(y, e);
}

// Greedy one-to-one matching by globally descending IoU; the shared
// convention for F1/Dice references.
inline std::vector<std::pair<size_t, size_t>> ref_greedy_match(
    const std::vector<pluforge::InstanceMask>& preds,
    const std::vector<pluforge::InstanceMask>& gts, double thr) {
    struct C { double iou; size_t p, g; };
    std::vector<C> cands;
    for (size_t p = 0; p < preds.size(); ++p)
        for (size_t g = 0; g < gts.size(); ++g) {
            double v = iou_bitmap(preds[p], gts[g]);
            if (v >= thr && v > 0) cands.push_back({v, p, g});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const C& a, const C& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.p != b.p) return a.p < b.p;
        return a.g < b.g;
    });
    std::vector<bool> pu(preds.size()), gu(gts.size());
    std::vector<std::pair<size_t, size_t>> out;
    for (const auto& c : cands) {
        if (pu[c.p] || gu[c.g]) continue;
        pu[c.p] = gu[c.g] = true;
        out.push_back({c.p, c.g});
    }
    return out;
}

inline double ref_f1(const std::vector<pluforge::InstanceMask>& preds,
                     const std::vector<pluforge::InstanceMask>& gts, double thr) {
    if (preds.empty() && gts.empty()) return 1.0;
    double tp = double(ref_greedy_match(preds, gts, thr).size());
    double fp = double(preds.size()) - tp, fn = double(gts.size()) - tp;
    double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
}

inline double ref_dice(const std::vector<pluforge::InstanceMask>& preds,
                       const std::vector<pluforge::InstanceMask>& gts) {
    auto matches = ref_greedy_match(preds, gts, 0.5);
    double s = 0;
    for (auto [p, g] : matches) {
        double inter = double(inter_bitmap(preds[p], gts[g]));
        s += 2.0 * inter / double(preds[p].area() + gts[g].area());
    }
    size_t denom = std::max(preds.size(), gts.size());
    return denom == 0 ? 1.0 : s / double(denom);
}

// All-point-interpolation AP at one threshold; preds pre-sorted by score is
// NOT assumed (we sort here, stable on index).
inline double ref_ap(const std::vector<pluforge::InstanceMask>& preds,
                     const std::vector<double>& scores,
                     const std::vector<pluforge::InstanceMask>& gts, double thr) {
    if (gts.empty()) return preds.empty() ? 1.0 : 0.0;
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    std::vector<bool> used(gts.size(), false);
    std::vector<int> is_tp;
    for (size_t oi : order) {
        double best = 0;
        int best_g = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[g]) continue;
            double v = iou_bitmap(preds[oi], gts[g]);
            if (v >= thr && v > best) { best = v; best_g = int(g); }
        }
        if (best_g >= 0) { used[best_g] = true; is_tp.push_back(1); }
        else is_tp.push_back(0);
    }
    std::vector<double> prec, rec;
    double tp = 0;
    for (size_t i = 0; i < is_tp.size(); ++i) {
        tp += is_tp[i];
        prec.push_back(tp / double(i + 1));
        rec.push_back(tp / double(gts.size()));
    }
    // all-point interpolation: integrate precision envelope over recall
    for (int i = int(prec.size()) - 2; i >= 0; --i) prec[i] = std::max(prec[i], prec[i + 1]);
    double ap = 0, prev_r = 0;
    for (size_t i = 0; i < prec.size(); ++i) {
        ap += (rec[i] - prev_r) * prec[i];
        prev_r = rec[i];
    }
    return ap;
}

inline double ref_aji(const std::vector<pluforge::InstanceMask>& preds,
                      const std::vector<pluforge::InstanceMask>& gts) {
    if (gts.empty() && preds.empty()) return 1.0;
    // iteratively taking the best remaining (pred, gt) pair is the same as
    // walking GT in descending best-IoU order with one-use predictions
    auto matches = ref_greedy_match(preds, gts, 0.0);
    std::vector<bool> pused(preds.size(), false), gused(gts.size(), false);
    double inter_sum = 0, union_sum = 0;
    for (auto [p, g] : matches) {
        pused[p] = true;
        gused[g] = true;
        uint64_t inter = inter_bitmap(preds[p], gts[g]);
        inter_sum += double(inter);
        union_sum += double(preds[p].area() + gts[g].area() - inter);
    }
    for (size_t g = 0; g < gts.size(); ++g)
        if (!gused[g]) union_sum += double(gts[g].area());
    for (size_t p = 0; p < preds.size(); ++p)
        if (!pused[p]) union_sum += double(preds[p].area());
    return union_sum == 0 ? 0.0 : inter_sum / union_sum;
}

// Random rectangular mask helper for property tests.
inline pluforge::InstanceMask random_rect_mask(int W, int H, std::mt19937_64& rng, int64_t id) {
    std::uniform_int_distribution<int> dx(0, W - 2), dy(0, H - 2);
    int x0 = dx(rng), y0 = dy(rng);
    std::uniform_int_distribution<int> dw(1, W - x0 - 1), dh(1, H - y0 - 1);
    int w = dw(rng), h = dh(rng);
    std::vector<uint8_t> bm(size_t(W) * H, 0);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) bm[size_t(y) * W + x] = 1;
    return pluforge::InstanceMask::from_bitmap(W, H, bm, id);
}

inline pluforge::InstanceMask random_blob_mask(int W, int H, std::mt19937_64& rng, int64_t id) {
    // union of 1-3 random rectangles; guaranteed nonempty
    std::uniform_int_distribution<int> dn(1, 3);
    std::vector<uint8_t> bm(size_t(W) * H, 0);
    int n = dn(rng);
    for (int i = 0; i < n; ++i) {
        auto r = random_rect_mask(W, H, rng, 0);
        auto rb = r.to_bitmap();
        for (size_t k = 0; k < bm.size(); ++k) bm[k] |= rb[k];
    }
    return pluforge::InstanceMask::from_bitmap(W, H, bm, id);
}

}  // namespace oracle
