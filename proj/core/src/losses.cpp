#include "pluforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pluforge {

namespace {

double clamp_prob(double p, double lo, double hi) { return std::clamp(p, lo, hi); }

// Jonker-Volgenant shortest augmenting path solver, square matrix,
// minimization. Returns row -> col assignment.
std::vector<int> jv_square(const std::vector<std::vector<double>>& cost, double& total) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> rowsol(n, -1);
    total = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) {
            rowsol[p[j] - 1] = j - 1;
            total += cost[p[j] - 1][j - 1];
        }
    }
    return rowsol;
}

// Optimal total over real cells when the real rows/cols listed are matched,
// padding to a square with zero-cost dummies.
double padded_optimum(const std::vector<std::vector<double>>& cost,
                      const std::vector<size_t>& rows, const std::vector<size_t>& cols) {
    size_t n = std::max(rows.size(), cols.size());
    if (n == 0) return 0.0;
    std::vector<std::vector<double>> sq(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) sq[i][j] = cost[rows[i]][cols[j]];
    double total = 0.0;
    jv_square(sq, total);
    return total;
}

}  // namespace

double focal_loss(double p_t, const FocalParams& params) {
    double p = clamp_prob(p_t, kProbEps, 1.0);
    return -params.alpha * std::pow(1.0 - p, params.gamma) * std::log(p);
}

double smooth_l1(const std::array<double, 4>& t, const std::array<double, 4>& v) {
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        double d = std::abs(t[i] - v[i]);
        sum += d < 1.0 ? 0.5 * d * d : d - 0.5;
    }
    return sum;
}

double seg_cross_entropy(const std::vector<uint8_t>& target_bitmap,
                         const std::vector<double>& probs) {
    if (target_bitmap.size() != probs.size() || probs.empty())
        throw std::invalid_argument("seg_cross_entropy: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        double p1 = clamp_prob(probs[i], kProbEps, 1.0 - kProbEps);
        sum += target_bitmap[i] ? -std::log(p1) : -std::log(1.0 - p1);
    }
    return sum / static_cast<double>(probs.size());
}

double binary_cross_entropy(const std::vector<int>& y, const std::vector<double>& p) {
    if (y.size() != p.size() || y.empty())
        throw std::invalid_argument("binary_cross_entropy: length mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        double pi = clamp_prob(p[i], kProbEps, 1.0 - kProbEps);
        sum += y[i] ? -std::log(pi) : -std::log(1.0 - pi);
    }
    return sum / static_cast<double>(y.size());
}

double count_bce(size_t k, const std::vector<double>& existence_probs, bool printed_form) {
    const size_t K = existence_probs.size();
    if (k > K) throw std::invalid_argument("count_bce: k > K");
    if (K == 0) throw std::invalid_argument("count_bce: empty slots");
    if (printed_form) {
        double sum = 0.0;
        for (double e : existence_probs) {
            double ei = clamp_prob(e, kProbEps, 1.0 - kProbEps);
            sum += static_cast<double>(k) * std::log(ei) +
                   static_cast<double>(K - k) * std::log(1.0 - ei);
        }
        return -sum / static_cast<double>(K);
    }
    std::vector<int> targets(K, 0);
    std::fill(targets.begin(), targets.begin() + k, 1);
    return binary_cross_entropy(targets, existence_probs);
}

Assignment hungarian_match(const std::vector<std::vector<double>>& cost) {
    const size_t rows = cost.size();
    const size_t cols = rows ? cost[0].size() : 0;
    if (rows == 0 || cols == 0) throw std::invalid_argument("hungarian_match: empty matrix");
    for (const auto& r : cost) {
        if (r.size() != cols) throw std::invalid_argument("hungarian_match: ragged matrix");
        for (double c : r)
            if (!std::isfinite(c)) throw std::invalid_argument("hungarian_match: non-finite cost");
    }

    std::vector<size_t> all_rows(rows), all_cols(cols);
    for (size_t i = 0; i < rows; ++i) all_rows[i] = i;
    for (size_t j = 0; j < cols; ++j) all_cols[j] = j;
    const double optimum = padded_optimum(cost, all_rows, all_cols);

    // Fix pairs row by row, always picking the smallest column (or skipping
    // the row, when rows > cols) that still completes to the optimum.
    Assignment result;
    double scale = std::max(1.0, std::abs(optimum));
    const double tol = 1e-12 * scale;
    double fixed_cost = 0.0;
    std::vector<size_t> free_cols = all_cols;
    size_t skips_left = rows > cols ? rows - cols : 0;
    for (size_t r = 0; r < rows; ++r) {
        std::vector<size_t> rest_rows;
        for (size_t i = r + 1; i < rows; ++i) rest_rows.push_back(i);
        bool placed = false;
        for (size_t ci = 0; ci < free_cols.size(); ++ci) {
            size_t c = free_cols[ci];
            std::vector<size_t> rest_cols;
            for (size_t cj = 0; cj < free_cols.size(); ++cj)
                if (cj != ci) rest_cols.push_back(free_cols[cj]);
            double tail = padded_optimum(cost, rest_rows, rest_cols);
            if (fixed_cost + cost[r][c] + tail <= optimum + tol) {
                result.pairs.emplace_back(r, c);
                fixed_cost += cost[r][c];
                free_cols.erase(free_cols.begin() + ci);
                placed = true;
                break;
            }
        }
        if (!placed) {
            if (skips_left == 0)
                throw std::logic_error("hungarian_match: internal refinement failure");
            --skips_left;
        }
    }
    result.total_cost = fixed_cost;
    return result;
}

double decomposition_iou_loss(const std::vector<InstanceMask>& pred_masks,
                              const std::vector<InstanceMask>& gt_masks) {
    if (pred_masks.empty() || gt_masks.empty())
        throw std::invalid_argument("decomposition_iou_loss: empty mask sequence");
    std::vector<std::vector<double>> cost(pred_masks.size(),
                                          std::vector<double>(gt_masks.size()));
    for (size_t i = 0; i < pred_masks.size(); ++i)
        for (size_t j = 0; j < gt_masks.size(); ++j)
            cost[i][j] = 1.0 - mask_iou(pred_masks[i], gt_masks[j]);
    Assignment a = hungarian_match(cost);
    // Unmatched GT masks take the maximal penalty.
    double sum = a.total_cost +
                 static_cast<double>(gt_masks.size() - a.pairs.size());
    return sum / static_cast<double>(gt_masks.size());
}

double total_sl_loss(const SlComponents& c, const LossWeights& w) {
    return c.cls + c.reg + c.seg + w.alpha_ocls * c.o_cls + w.beta_count * c.i_count +
           w.gamma_iou * c.i_iou;
}

double total_sassl_loss(double l_real, double l_pseudo, double l_synthetic,
                        const LossWeights& w) {
    return l_real + w.lambda_ssl * (l_pseudo + l_synthetic);
}

}  // namespace pluforge
