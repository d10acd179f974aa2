#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pluforge/losses.hpp"

using namespace pluforge;

TEST_CASE("focal_loss closed forms") {
    FocalParams p;  // alpha 0.25, gamma 2
    CHECK(focal_loss(1.0, p) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(focal_loss(0.5, p) == doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));
    // gamma = 0 reduces to alpha-weighted cross-entropy
    std::mt19937_64 rng(1);
    FocalParams p0{0.25, 0.0};
    for (int i = 0; i < 50; ++i) {
        double pt = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
        CHECK(focal_loss(pt, p0) == doctest::Approx(-0.25 * std::log(pt)).epsilon(1e-12));
    }
}

TEST_CASE("smooth_l1 piecewise values") {
    std::array<double, 4> z{0, 0, 0, 0};
    CHECK(smooth_l1(z, z) == 0.0);
    CHECK(smooth_l1({0.5, 0, 0, 0}, z) == doctest::Approx(0.125));
    CHECK(smooth_l1({2, 0, 0, 0}, z) == doctest::Approx(1.5));
}

TEST_CASE("seg_cross_entropy closed forms and brute force") {
    SUBCASE("matching one-hot targets costs at most the clamp floor") {
        std::vector<uint8_t> t = {1, 0, 1, 0};
        std::vector<double> p = {1.0, 0.0, 1.0, 0.0};
        CHECK(seg_cross_entropy(t, p) <= 2 * kProbEps);
    }
    SUBCASE("uniform 0.5 gives ln 2") {
        std::vector<uint8_t> t = {1, 0, 1, 1};
        std::vector<double> p(4, 0.5);
        CHECK(seg_cross_entropy(t, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("random 4x4 matches brute force") {
        std::mt19937_64 rng(2);
        for (int c = 0; c < 50; ++c) {
            std::vector<uint8_t> t(16);
            std::vector<double> p(16);
            for (int i = 0; i < 16; ++i) {
                t[i] = rng() & 1;
                p[i] = std::uniform_real_distribution<double>(0, 1)(rng);
            }
            CHECK(seg_cross_entropy(t, p) ==
                  doctest::Approx(oracle::ref_seg_ce(t, p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("binary_cross_entropy") {
    CHECK(binary_cross_entropy({1}, {1.0 - kProbEps}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(binary_cross_entropy({1, 0}, {0.5, 0.5}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    std::mt19937_64 rng(3);
    for (int c = 0; c < 50; ++c) {
        std::vector<int> y(16);
        std::vector<double> p(16);
        for (int i = 0; i < 16; ++i) {
            y[i] = int(rng() & 1);
            p[i] = std::uniform_real_distribution<double>(0, 1)(rng);
        }
        CHECK(binary_cross_entropy(y, p) == doctest::Approx(oracle::ref_bce(y, p)).epsilon(1e-12));
    }
}

TEST_CASE("count_bce slot targets") {
    std::vector<double> ones(5, 1.0 - kProbEps);
    CHECK(count_bce(5, ones) <= 1e-6);
    std::vector<double> half(5, 0.5);
    CHECK(count_bce(2, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    std::vector<double> eps(5, kProbEps);
    CHECK(count_bce(0, eps) <= 1e-6);
    // printed (uniform-weight) form differs from the slot form in general
    std::vector<double> mixed = {0.9, 0.8, 0.3, 0.2, 0.1};
    CHECK(count_bce(2, mixed, true) ==
          doctest::Approx(oracle::ref_count_bce(2, mixed, true)).epsilon(1e-12));
    CHECK(count_bce(2, mixed, false) !=
          doctest::Approx(count_bce(2, mixed, true)).epsilon(1e-6));
}

TEST_CASE("hungarian_match examples and permutation oracle") {
    SUBCASE("2x2 hand case") {
        auto a = hungarian_match({{1, 2}, {3, 1}});
        CHECK(a.total_cost == doctest::Approx(2.0));
        REQUIRE(a.pairs.size() == 2);
        CHECK(a.pairs[0] == std::pair<size_t, size_t>{0, 0});
        CHECK(a.pairs[1] == std::pair<size_t, size_t>{1, 1});
    }
    SUBCASE("identity-structured cost picks the diagonal") {
        std::vector<std::vector<double>> c(4, std::vector<double>(4, 1.0));
        for (int i = 0; i < 4; ++i) c[i][i] = 0.0;
        auto a = hungarian_match(c);
        CHECK(a.total_cost == 0.0);
        for (size_t i = 0; i < 4; ++i) CHECK(a.pairs[i].second == i);
    }
    SUBCASE("random 6x6 equals the 720-permutation minimum") {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 60; ++t) {
            std::vector<std::vector<double>> c(6, std::vector<double>(6));
            for (auto& row : c)
                for (auto& v : row) v = std::uniform_real_distribution<double>(0, 10)(rng);
            auto got = hungarian_match(c);
            auto [want, perm] = oracle::brute_assignment(c);
            CHECK(got.total_cost == doctest::Approx(want).epsilon(1e-9));
        }
    }
    SUBCASE("ties resolve to the lexicographically smallest pair sequence") {
        // every assignment costs 2; smallest pair sequence is the diagonal
        std::vector<std::vector<double>> c(3, std::vector<double>(3, 2.0 / 3.0));
        auto a = hungarian_match(c);
        for (size_t i = 0; i < 3; ++i) CHECK(a.pairs[i].second == i);
    }
    SUBCASE("rectangular matrices match min(rows, cols) pairs") {
        auto a = hungarian_match({{5, 1, 9}, {4, 8, 2}});
        CHECK(a.pairs.size() == 2);
        CHECK(a.total_cost == doctest::Approx(3.0));
    }
}

TEST_CASE("decomposition_iou_loss") {
    std::mt19937_64 rng(5);
    auto sq = [](int x0) {
        std::vector<uint8_t> bm(10 * 10, 0);
        for (int y = 0; y < 4; ++y)
            for (int x = x0; x < x0 + 4; ++x) bm[size_t(y) * 10 + x] = 1;
        return InstanceMask::from_bitmap(10, 10, bm, x0);
    };
    SUBCASE("identical sets in any order score 0") {
        std::vector<InstanceMask> gt = {sq(0), sq(5)};
        std::vector<InstanceMask> pred = {sq(5), sq(0)};
        CHECK(decomposition_iou_loss(pred, gt) == doctest::Approx(0.0));
    }
    SUBCASE("fully disjoint sets score 1") {
        CHECK(decomposition_iou_loss({sq(0)}, {sq(5)}) == doctest::Approx(1.0));
    }
    SUBCASE("half-overlapping equal squares: 1 - 1/3") {
        CHECK(decomposition_iou_loss({sq(2)}, {sq(0)}) == doctest::Approx(1.0 - 1.0 / 3.0));
    }
    SUBCASE("unmatched GT contributes penalty 1") {
        CHECK(decomposition_iou_loss({sq(0)}, {sq(0), sq(5)}) == doctest::Approx(0.5));
    }
    SUBCASE("permutation invariance") {
        for (int t = 0; t < 20; ++t) {
            std::vector<InstanceMask> pred, gt;
            for (int i = 0; i < 4; ++i) {
                pred.push_back(oracle::random_blob_mask(12, 12, rng, i));
                gt.push_back(oracle::random_blob_mask(12, 12, rng, 10 + i));
            }
            double base = decomposition_iou_loss(pred, gt);
            std::shuffle(pred.begin(), pred.end(), rng);
            std::shuffle(gt.begin(), gt.end(), rng);
            CHECK(decomposition_iou_loss(pred, gt) == doctest::Approx(base).epsilon(1e-12));
        }
    }
}

TEST_CASE("total losses") {
    LossWeights w;
    CHECK(total_sl_loss({}, w) == 0.0);
    CHECK(total_sl_loss({1, 1, 1, 1, 1, 1}, w) == doctest::Approx(6.0));
    LossWeights w2{2.0, 0.5, 1.0, 1.0};
    CHECK(total_sl_loss({0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, w2) == doctest::Approx(2.25));

    LossWeights l0;
    l0.lambda_ssl = 0.0;
    CHECK(total_sassl_loss(0.7, 5.0, 9.0, l0) == doctest::Approx(0.7));
    LossWeights l1;
    CHECK(total_sassl_loss(1, 1, 1, l1) == doctest::Approx(3.0));
    LossWeights l2;
    l2.lambda_ssl = 2.0;
    CHECK(total_sassl_loss(0.5, 0.2, 0.3, l2) == doctest::Approx(1.5));
}
