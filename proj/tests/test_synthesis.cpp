#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pluforge/simulator.hpp"
#include "pluforge/synthesis.hpp"

using namespace pluforge;

namespace {

InstanceMask rect(int W, int H, int x0, int y0, int w, int h, int64_t id) {
    std::vector<uint8_t> bm(size_t(W) * H, 0);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) bm[size_t(y) * W + x] = 1;
    return InstanceMask::from_bitmap(W, H, bm, id);
}

}  // namespace

TEST_CASE("instance_transparency is the foreground mean") {
    GrayImage img(6, 6, 100.f);
    auto m = rect(6, 6, 1, 1, 2, 2, 1);
    CHECK(instance_transparency(img, m) == doctest::Approx(100.0));

    GrayImage img2(6, 6, 0.f);
    img2.at(1, 1) = 50.f;
    img2.at(2, 1) = 150.f;
    auto m2 = rect(6, 6, 1, 1, 2, 1, 1);
    CHECK(instance_transparency(img2, m2) == doctest::Approx(100.0));

    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        GrayImage r(8, 8);
        for (auto& v : r.px) v = float(rng() % 256);
        auto mask = oracle::random_blob_mask(8, 8, rng, 1);
        auto bm = mask.to_bitmap();
        double sum = 0, n = 0;
        for (size_t i = 0; i < bm.size(); ++i)
            if (bm[i]) { sum += r.px[i]; n += 1; }
        CHECK(instance_transparency(r, mask) == doctest::Approx(sum / n).epsilon(1e-12));
    }
}

TEST_CASE("instance_focus is the Laplacian variance") {
    GrayImage flat(8, 8, 77.f);
    auto m = rect(8, 8, 2, 2, 4, 4, 1);
    CHECK(instance_focus(flat, m) == doctest::Approx(0.0));

    GrayImage ramp(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(x, y) = float(3 * x + 2 * y);
    auto interior = rect(8, 8, 2, 2, 4, 4, 1);
    CHECK(instance_focus(ramp, interior) == doctest::Approx(0.0).epsilon(1e-9));

    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        GrayImage r(8, 8);
        for (auto& v : r.px) v = float(rng() % 256);
        auto mask = oracle::random_blob_mask(8, 8, rng, 1);
        auto bm = mask.to_bitmap();
        // brute-force 4-neighbor Laplacian with edge replication
        auto lap = [&](int x, int y) {
            auto px = [&](int xx, int yy) {
                xx = std::clamp(xx, 0, 7);
                yy = std::clamp(yy, 0, 7);
                return double(r.at(xx, yy));
            };
            return px(x - 1, y) + px(x + 1, y) + px(x, y - 1) + px(x, y + 1) - 4 * px(x, y);
        };
        double sum = 0, n = 0;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                if (bm[size_t(y) * 8 + x]) { sum += lap(x, y); n += 1; }
        double mean = sum / n, var = 0;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                if (bm[size_t(y) * 8 + x]) var += (lap(x, y) - mean) * (lap(x, y) - mean);
        var /= n;  // population variance
        CHECK(instance_focus(r, mask) == doctest::Approx(var).epsilon(1e-9));
    }
}

TEST_CASE("categorize quadrants with strict thresholds") {
    CHECK(categorize(1.0, 1.0, 2.0, 2.0) == 1);
    CHECK(categorize(3.0, 1.0, 2.0, 2.0) == 2);
    CHECK(categorize(1.0, 3.0, 2.0, 2.0) == 3);
    CHECK(categorize(3.0, 3.0, 2.0, 2.0) == 4);
    CHECK(categorize(2.0, 3.0, 2.0, 2.0) == 3);  // T == t_T stays low side
}

TEST_CASE("fit_category_thresholds takes medians") {
    GrayImage a(6, 6, 10.f), b(6, 6, 20.f), c(6, 6, 30.f);
    Scene sa, sb, sc;
    sa.width = sa.height = sb.width = sb.height = sc.width = sc.height = 6;
    sa.instances = {rect(6, 6, 0, 0, 3, 3, 1)};
    sb.instances = {rect(6, 6, 0, 0, 3, 3, 1)};
    sc.instances = {rect(6, 6, 0, 0, 3, 3, 1)};
    SUBCASE("single instance: thresholds equal its values") {
        auto [tT, tF] = fit_category_thresholds({a}, {sa});
        CHECK(tT == doctest::Approx(10.0));
        CHECK(tF == doctest::Approx(0.0));
    }
    SUBCASE("three values take the middle one") {
        auto [tT, tF] = fit_category_thresholds({a, b, c}, {sa, sb, sc});
        CHECK(tT == doctest::Approx(20.0));
        CHECK(tF == doctest::Approx(0.0));
    }
}

TEST_CASE("render_contour_image") {
    SUBCASE("empty scene renders all zeros") {
        Scene s;
        s.width = s.height = 10;
        auto img = render_contour_image(s, {});
        for (auto p : img.px) CHECK(p == 0);
    }
    SUBCASE("3x3 square, category 2, stroke width 2") {
        Scene s;
        s.width = s.height = 12;
        s.instances = {rect(12, 12, 4, 4, 3, 3, 1)};
        auto img = render_contour_image(s, {2});
        size_t n2 = 0, nother = 0;
        for (auto p : img.px) {
            if (p == 2) ++n2;
            else if (p != 0) ++nother;
        }
        CHECK(nother == 0);
        // the 8 perimeter pixels dilated by a 2x2 structuring element
        CHECK(n2 >= 8);
        CHECK(n2 <= 8 * 4);
        // every perimeter pixel itself carries the category
        auto chains = extract_contour(s.instances[0]);
        for (auto [x, y] : chains[0].pixels) CHECK(img.at(x, y) == 2);
    }
    SUBCASE("crossing contours: each pixel carries exactly one category") {
        Scene s;
        s.width = s.height = 16;
        s.instances = {rect(16, 16, 2, 4, 10, 4, 1), rect(16, 16, 5, 1, 4, 10, 2)};
        auto img = render_contour_image(s, {1, 3});
        for (auto p : img.px) CHECK(p <= 4);
        // instance 2 has the larger id, so contested pixels are category 3
        auto only1 = render_contour_image(
            Scene{"", 16, 16, {s.instances[0]}, std::nullopt}, {1});
        auto only2 = render_contour_image(
            Scene{"", 16, 16, {s.instances[1]}, std::nullopt}, {3});
        for (size_t i = 0; i < img.px.size(); ++i)
            if (only1.px[i] && only2.px[i]) CHECK(img.px[i] == 3);
    }
}

TEST_CASE("augment_instances") {
    Scene s;
    s.width = s.height = 32;
    s.instances = {rect(32, 32, 10, 10, 2, 2, 1)};
    SUBCASE("all transforms disabled is the identity") {
        AugmentationPolicy p;
        p.translate_enabled = p.rotate_enabled = p.scale_enabled = false;
        auto r = augment_instances(s, p);
        CHECK(r.scene.instances[0].runs == s.instances[0].runs);
        CHECK(r.dropped_ids.empty());
    }
    SUBCASE("pure translation shifts the mask exactly") {
        AugmentationPolicy p;
        p.rotate_enabled = p.scale_enabled = false;
        p.translate_lo = p.translate_hi = 3.0;
        p.seed = 2;
        auto r = augment_instances(s, p);
        REQUIRE(r.scene.instances.size() == 1);
        CHECK(r.scene.instances[0].area() == 4);
        auto bb = bbox_of(r.scene.instances[0]);
        CHECK(std::abs(bb.x - 10) == 3);
        CHECK(std::abs(bb.y - 10) == 3);
    }
    SUBCASE("360-degree rotation preserves pixel count within 10%") {
        std::mt19937_64 rng(9);
        AugmentationPolicy p;
        p.translate_enabled = p.scale_enabled = false;
        p.rotate_lo = p.rotate_hi = 360.0;
        for (int t = 0; t < 20; ++t) {
            Scene sc;
            sc.width = sc.height = 32;
            sc.instances = {oracle::random_blob_mask(32, 32, rng, 1)};
            p.seed = rng();
            auto r = augment_instances(sc, p);
            REQUIRE(r.scene.instances.size() == 1);
            double ratio = double(r.scene.instances[0].area()) / double(sc.instances[0].area());
            CHECK(ratio > 0.9);
            CHECK(ratio < 1.1);
        }
    }
    SUBCASE("fixed seed reproduces the exact augmented scene") {
        AugmentationPolicy p;
        p.seed = 77;
        auto r1 = augment_instances(s, p);
        auto r2 = augment_instances(s, p);
        REQUIRE(r1.scene.instances.size() == r2.scene.instances.size());
        for (size_t i = 0; i < r1.scene.instances.size(); ++i)
            CHECK(r1.scene.instances[i].runs == r2.scene.instances[i].runs);
    }
}

TEST_CASE("procedural generator contract") {
    auto gen = procedural_generator();
    SUBCASE("empty contour image yields the background everywhere") {
        IndexedImage empty(32, 32);
        auto img = synthesize(empty, gen, 5);
        double mean = 0;
        for (auto v : img.px) mean += v;
        mean /= double(img.px.size());
        CHECK(mean == doctest::Approx(220.0).epsilon(0.01));
    }
    SUBCASE("category-1 contour fills the interior darker than background") {
        Scene s;
        s.width = s.height = 32;
        s.instances = {rect(32, 32, 8, 8, 12, 12, 1)};
        auto contour = render_contour_image(s, {1});
        auto img = synthesize(contour, gen, 5);
        // interior center should be near the category-1 fill (80), far
        // from background 220
        CHECK(img.at(14, 14) < 150.f);
        CHECK(img.at(1, 1) > 180.f);
    }
    SUBCASE("identical input and seed give bit-identical output") {
        Scene s;
        s.width = s.height = 32;
        s.instances = {rect(32, 32, 8, 8, 12, 12, 1)};
        auto contour = render_contour_image(s, {3});
        auto i1 = synthesize(contour, gen, 9);
        auto i2 = synthesize(contour, gen, 9);
        CHECK(i1.px == i2.px);
        auto i3 = synthesize(contour, gen, 10);
        CHECK(i1.px != i3.px);
    }
}

TEST_CASE("gan_objective") {
    SynthesisConfig cfg;
    SUBCASE("discriminator-optimal outputs give near-zero gan value") {
        std::vector<std::vector<double>> dr(3, std::vector<double>(4, 1.0 - 1e-9));
        std::vector<std::vector<double>> df(3, std::vector<double>(4, 1e-9));
        std::vector<std::vector<double>> feats(3, std::vector<double>{0.0});
        auto o = gan_objective(dr, df, feats, feats, cfg);
        CHECK(std::abs(o.gan_value) < 1e-5);
    }
    SUBCASE("identical features zero the matching term") {
        std::vector<std::vector<double>> feats(3, std::vector<double>{1, 2, 3});
        std::vector<std::vector<double>> dr(3, std::vector<double>(4, 0.5));
        auto o = gan_objective(dr, dr, feats, feats, cfg);
        CHECK(o.fm_value == doctest::Approx(0.0));
        CHECK(o.combined == doctest::Approx(o.gan_value));
    }
    SUBCASE("random tensors match brute-force sums") {
        std::mt19937_64 rng(10);
        auto randmat = [&](double lo, double hi) {
            std::vector<std::vector<double>> m(3, std::vector<double>(5));
            for (auto& row : m)
                for (auto& v : row) v = std::uniform_real_distribution<double>(lo, hi)(rng);
            return m;
        };
        auto dr = randmat(0.01, 0.99), df = randmat(0.01, 0.99);
        auto fr = randmat(-2, 2), ff = randmat(-2, 2);
        auto o = gan_objective(dr, df, fr, ff, cfg);
        double gan = 0, fm = 0;
        for (int s = 0; s < 3; ++s) {
            double lr = 0, lf = 0, d = 0;
            for (int i = 0; i < 5; ++i) {
                lr += std::log(dr[s][i]);
                lf += std::log(1.0 - df[s][i]);
                d += std::abs(fr[s][i] - ff[s][i]);
            }
            gan += (lr + lf) / 5.0;
            fm += d / 5.0;
        }
        CHECK(o.gan_value == doctest::Approx(gan).epsilon(1e-12));
        CHECK(o.fm_value == doctest::Approx(fm).epsilon(1e-12));
        CHECK(o.combined == doctest::Approx(gan + cfg.fm_weight * fm).epsilon(1e-12));
    }
}

TEST_CASE("layered_mask_rasters splits overlap into layers") {
    Scene s;
    s.width = s.height = 20;
    SUBCASE("disjoint scene fits one layer") {
        s.instances = {rect(20, 20, 0, 0, 3, 3, 1), rect(20, 20, 8, 8, 3, 3, 2)};
        CHECK(layered_mask_rasters(s).size() == 1);
    }
    SUBCASE("overlapping pair needs two layers") {
        s.instances = {rect(20, 20, 0, 0, 6, 6, 1), rect(20, 20, 3, 3, 6, 6, 2)};
        auto layers = layered_mask_rasters(s);
        CHECK(layers.size() == 2);
        // union of layer labels covers both instances exactly
        size_t labeled = 0;
        for (const auto& l : layers)
            for (auto p : l.px) labeled += p != 0;
        CHECK(labeled == s.instances[0].area() + s.instances[1].area());
    }
    SUBCASE("empty scene still emits one raster") {
        CHECK(layered_mask_rasters(s).size() == 1);
    }
}
