#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pluforge/pseudo_labels.hpp"

using namespace pluforge;

namespace {

InstanceMask rect(int W, int H, int x0, int y0, int w, int h, int64_t id) {
    std::vector<uint8_t> bm(size_t(W) * H, 0);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) bm[size_t(y) * W + x] = 1;
    return InstanceMask::from_bitmap(W, H, bm, id);
}

Proposal grid_proposal(int W, int H, std::vector<double> probs, double score) {
    Proposal p;
    p.box_score = score;
    p.prob_grid = std::move(probs);
    p.box = {0, 0, W, H};
    return p;
}

}  // namespace

TEST_CASE("threshold_pseudo_labels box and pixel thresholds") {
    ProbabilityMaskSet raw;
    raw.width = raw.height = 2;
    SUBCASE("box_score 0.69 is excluded entirely") {
        raw.proposals = {grid_proposal(2, 2, {0.9, 0.9, 0.9, 0.9}, 0.69)};
        CHECK(threshold_pseudo_labels(raw).masks.empty());
    }
    SUBCASE("pixel threshold includes the boundary P = 0.5") {
        raw.proposals = {grid_proposal(2, 2, {0.6, 0.4, 0.5, 0.1}, 0.9)};
        auto out = threshold_pseudo_labels(raw);
        REQUIRE(out.masks.size() == 1);
        CHECK(out.masks[0].to_bitmap() == std::vector<uint8_t>{1, 0, 1, 0});
        CHECK(out.provenance[0].box_score == doctest::Approx(0.9));
    }
    SUBCASE("empty thresholded masks are dropped") {
        raw.proposals = {grid_proposal(2, 2, {0.1, 0.1, 0.1, 0.1}, 0.9)};
        CHECK(threshold_pseudo_labels(raw).masks.empty());
    }
    SUBCASE("random 8x8 grids equal the per-pixel oracle") {
        std::mt19937_64 rng(6);
        ProbabilityMaskSet r8;
        r8.width = r8.height = 8;
        for (int t = 0; t < 50; ++t) {
            std::vector<double> probs(64);
            for (auto& p : probs) {
                p = std::uniform_real_distribution<double>(0, 1)(rng);
                if ((rng() & 7) == 0) p = 0.5;  // exercise the boundary
            }
            r8.proposals = {grid_proposal(8, 8, probs, 0.8)};
            auto out = threshold_pseudo_labels(r8);
            std::vector<uint8_t> want(64);
            bool any = false;
            for (int i = 0; i < 64; ++i) {
                want[i] = probs[i] >= 0.5 ? 1 : 0;
                any |= want[i] != 0;
            }
            if (!any) {
                CHECK(out.masks.empty());
            } else {
                REQUIRE(out.masks.size() == 1);
                CHECK(out.masks[0].to_bitmap() == want);
            }
        }
    }
}

TEST_CASE("build_judgment_training_set") {
    Scene s;
    s.width = s.height = 20;
    SUBCASE("disjoint scene: only label-1 samples") {
        s.instances = {rect(20, 20, 0, 0, 3, 3, 1), rect(20, 20, 5, 5, 3, 3, 2),
                       rect(20, 20, 10, 10, 3, 3, 3)};
        auto set = build_judgment_training_set(s);
        REQUIRE(set.size() == 3);
        for (const auto& js : set) CHECK(js.label == 1);
    }
    SUBCASE("two overlapping instances add one merged label-0 sample") {
        s.instances = {rect(20, 20, 0, 0, 4, 4, 1), rect(20, 20, 2, 0, 4, 4, 2)};
        auto set = build_judgment_training_set(s);
        REQUIRE(set.size() == 3);
        CHECK(set[0].label == 1);
        CHECK(set[1].label == 1);
        CHECK(set[2].label == 0);
        CHECK(set[2].component_masks.size() == 2);
        CHECK(set[2].mask.area() == merge_masks({s.instances[0], s.instances[1]}, 0).area());
    }
    SUBCASE("overlap chains form one cluster") {
        s.instances = {rect(20, 20, 0, 0, 4, 4, 1), rect(20, 20, 3, 0, 4, 4, 2),
                       rect(20, 20, 6, 0, 4, 4, 3)};
        auto set = build_judgment_training_set(s);
        REQUIRE(set.size() == 4);
        CHECK(set[3].label == 0);
        CHECK(set[3].component_masks.size() == 3);
    }
}

TEST_CASE("assign_judgment_label strict comparison") {
    auto correct = rect(10, 10, 0, 0, 4, 4, 1);
    auto erroneous = rect(10, 10, 0, 0, 6, 6, 2);
    SUBCASE("pred equals a correct mask") {
        CHECK(assign_judgment_label(correct, {correct}, {erroneous}) == 1);
    }
    SUBCASE("pred equals an erroneous mask") {
        CHECK(assign_judgment_label(erroneous, {correct}, {erroneous}) == 0);
    }
    SUBCASE("exact IoU tie goes to label 0") {
        auto pred = rect(10, 10, 0, 0, 2, 2, 3);
        auto c = rect(10, 10, 0, 0, 4, 2, 4);  // IoU 2x2 / 4x2 = 0.5
        auto e = rect(10, 10, 0, 0, 2, 4, 5);  // IoU 2x2 / 2x4 = 0.5
        CHECK(assign_judgment_label(pred, {c}, {e}) == 0);
    }
}

TEST_CASE("build_decomposition_target slot layout") {
    Scene s;
    s.width = s.height = 30;
    auto make_sample = [&](int n) {
        JudgmentSample js;
        js.label = 0;
        std::vector<InstanceMask> comps;
        for (int i = 0; i < n; ++i) comps.push_back(rect(30, 30, i * 3, 0, 4, 2 + i, i + 1));
        js.component_masks = comps;
        js.mask = merge_masks(comps, 100);
        return js;
    };
    SUBCASE("2 components, K=5") {
        auto t = build_decomposition_target(make_sample(2), 5);
        CHECK(t.k == 2);
        REQUIRE(t.slots.size() == 5);
        CHECK(t.slots[0].has_value());
        CHECK(t.slots[1].has_value());
        // descending area: the taller rectangle first
        CHECK(t.slots[0]->area() >= t.slots[1]->area());
        for (int i = 2; i < 5; ++i) CHECK(!t.slots[i].has_value());
        CHECK(t.existence == std::vector<bool>{true, true, false, false, false});
    }
    SUBCASE("5 components fill every slot") {
        auto t = build_decomposition_target(make_sample(5), 5);
        CHECK(t.k == 5);
        for (int i = 0; i < 5; ++i) CHECK(t.slots[i].has_value());
    }
    SUBCASE("6 components overflow K=5") {
        CHECK_THROWS(build_decomposition_target(make_sample(6), 5));
    }
}

TEST_CASE("apply_plu") {
    auto a = rect(20, 20, 0, 0, 4, 4, 1);
    auto b = rect(20, 20, 8, 8, 4, 4, 2);
    PseudoLabelSet set;
    set.width = set.height = 20;
    set.masks = {a, b};
    set.provenance = {{0, 0.9}, {1, 0.8}};

    SUBCASE("all-correct judgment is a no-op with empty log") {
        auto out = apply_plu(
            set, [](const InstanceMask&) { return 1.0; },
            [](const InstanceMask&) { return std::vector<std::pair<InstanceMask, double>>{}; });
        REQUIRE(out.masks.size() == 2);
        CHECK(out.masks[0].runs == a.runs);
        CHECK(out.masks[1].runs == b.runs);
        CHECK(out.correction_log.empty());
    }
    SUBCASE("a merged mask is replaced by its decomposition") {
        auto merged = merge_masks({a, rect(20, 20, 2, 0, 4, 4, 9)}, 1);
        PseudoLabelSet s2;
        s2.width = s2.height = 20;
        s2.masks = {merged, b};
        s2.provenance = {{0, 0.9}, {1, 0.8}};
        auto c1 = rect(20, 20, 0, 0, 4, 4, 0);
        auto c2 = rect(20, 20, 2, 0, 4, 4, 0);
        auto out = apply_plu(
            s2,
            [&](const InstanceMask& m) { return m.runs == merged.runs ? 0.0 : 1.0; },
            [&](const InstanceMask&) {
                return std::vector<std::pair<InstanceMask, double>>{{c1, 0.9}, {c2, 0.9}};
            });
        REQUIRE(out.masks.size() == 3);
        REQUIRE(out.correction_log.size() == 1);
        CHECK(out.correction_log[0].reason == "decomposed");
        CHECK(out.correction_log[0].replacement_ids.size() == 2);
        // fresh ids must not collide with survivors
        for (int64_t rid : out.correction_log[0].replacement_ids)
            CHECK(rid > 2);
    }
    SUBCASE("zero surviving slots keeps the original and logs a no-op") {
        auto out = apply_plu(
            set, [](const InstanceMask&) { return 0.0; },
            [](const InstanceMask&) { return std::vector<std::pair<InstanceMask, double>>{}; });
        REQUIRE(out.masks.size() == 2);
        REQUIRE(out.correction_log.size() == 2);
        for (const auto& e : out.correction_log) {
            CHECK(e.replacement_ids.empty());
            CHECK(e.reason.rfind("kept:", 0) == 0);
        }
    }
    SUBCASE("existence threshold filters slots") {
        auto c1 = rect(20, 20, 0, 0, 4, 4, 0);
        auto c2 = rect(20, 20, 8, 8, 4, 4, 0);
        auto out = apply_plu(
            set, [](const InstanceMask&) { return 0.0; },
            [&](const InstanceMask&) {
                return std::vector<std::pair<InstanceMask, double>>{{c1, 0.9}, {c2, 0.2}};
            },
            0.5, 0.5);
        // each of the two masks judged wrong gets replaced by the single
        // surviving slot c1
        REQUIRE(out.masks.size() == 2);
        CHECK(out.masks[0].runs == c1.runs);
        CHECK(out.correction_log.size() == 2);
    }
}
