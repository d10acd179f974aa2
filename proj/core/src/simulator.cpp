#include "pluforge/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pluforge {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

// Box-Muller; self-contained so output is stable across standard libraries.
double gaussian(std::mt19937_64& rng) {
    double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-300);
    double u2 = uniform(rng, 0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<uint8_t> ellipse_bitmap(int w, int h, double cx, double cy, double a, double b,
                                    double phi) {
    std::vector<uint8_t> bm(static_cast<size_t>(w) * h, 0);
    double cosp = std::cos(phi), sinp = std::sin(phi);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            double u = (dx * cosp + dy * sinp) / a;
            double v = (-dx * sinp + dy * cosp) / b;
            if (u * u + v * v <= 1.0) bm[static_cast<size_t>(y) * w + x] = 1;
        }
    return bm;
}

void add_noise(GrayImage& img, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    for (auto& v : img.px)
        v = static_cast<float>(std::clamp(v + sigma * gaussian(rng), 0.0, 255.0));
}

constexpr double kGridHi = 1.0 - 1e-4;
constexpr double kGridLo = 1e-4;

std::vector<double> mask_to_prob_grid(const InstanceMask& m) {
    auto bm = m.to_bitmap();
    std::vector<double> g(bm.size());
    for (size_t i = 0; i < bm.size(); ++i) g[i] = bm[i] ? kGridHi : kGridLo;
    return g;
}

InstanceMask translate_mask(const InstanceMask& m, int dx, int dy) {
    auto bm = m.to_bitmap();
    std::vector<uint8_t> out(bm.size(), 0);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            int sx = x - dx, sy = y - dy;
            if (sx >= 0 && sx < m.width && sy >= 0 && sy < m.height &&
                bm[static_cast<size_t>(sy) * m.width + sx])
                out[static_cast<size_t>(y) * m.width + x] = 1;
        }
    return InstanceMask::from_bitmap(m.width, m.height, out, m.instance_id);
}

}  // namespace

SimScene generate_scene(const SimConfig& cfg, uint64_t seed) {
    if (cfg.axis_lo < 2.0) throw std::invalid_argument("generate_scene: axes must be >= 2 px");
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(seed)));
    const int w = cfg.width, h = cfg.height;

    SimScene sim;
    sim.scene.image_path = "";
    sim.scene.width = w;
    sim.scene.height = h;

    int n = uniform_int(rng, cfg.n_instances_lo, cfg.n_instances_hi);
    struct Placed {
        double cx, cy, a, b;
    };
    std::vector<Placed> placed;
    std::vector<std::vector<uint8_t>> bitmaps;
    for (int i = 0; i < n; ++i) {
        double a = uniform(rng, cfg.axis_lo, cfg.axis_hi);
        double b = uniform(rng, cfg.axis_lo, cfg.axis_hi);
        double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        bool want_overlap = !placed.empty() && uniform(rng, 0.0, 1.0) < cfg.overlap_bias;
        bool ok = false;
        double cx = 0, cy = 0;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            if (want_overlap) {
                const Placed& t = placed[static_cast<size_t>(
                    uniform_int(rng, 0, static_cast<int>(placed.size()) - 1))];
                cx = t.cx + uniform(rng, -0.8, 0.8) * (t.a + a) * 0.5;
                cy = t.cy + uniform(rng, -0.8, 0.8) * (t.b + b) * 0.5;
            } else {
                cx = uniform(rng, a, w - a);
                cy = uniform(rng, b, h - b);
            }
            if (cx < 1 || cx > w - 1 || cy < 1 || cy > h - 1) continue;
            auto bm = ellipse_bitmap(w, h, cx, cy, a, b, phi);
            uint64_t area = 0;
            for (uint8_t v : bm) area += v;
            if (area == 0) continue;
            if (want_overlap) {
                bool overlaps = false;
                for (const auto& other : bitmaps) {
                    for (size_t p = 0; p < bm.size(); ++p)
                        if (bm[p] && other[p]) {
                            overlaps = true;
                            break;
                        }
                    if (overlaps) break;
                }
                if (!overlaps) continue;
            }
            bitmaps.push_back(std::move(bm));
            placed.push_back({cx, cy, a, b});
            ok = true;
        }
        // unplaceable instances are skipped
    }

    GrayImage canvas(w, h, static_cast<float>(cfg.background_gray));
    int64_t next_id = 1;
    for (size_t i = 0; i < bitmaps.size(); ++i) {
        double gray = uniform(rng, cfg.transparency_lo, cfg.transparency_hi);
        double blur = uniform(rng, cfg.focus_blur_lo, cfg.focus_blur_hi);

        // Instance layer over white, blurred per its focus level, then
        // min-blended so overlap darkens (brightfield absorption).
        GrayImage layer(w, h, 255.f);
        for (size_t p = 0; p < bitmaps[i].size(); ++p)
            if (bitmaps[i][p]) layer.px[p] = static_cast<float>(gray);
        layer = gaussian_blur(layer, blur);
        for (size_t p = 0; p < canvas.size(); ++p)
            canvas.px[p] = std::min(canvas.px[p], layer.px[p]);

        sim.scene.instances.push_back(InstanceMask::from_bitmap(w, h, bitmaps[i], next_id++));
        InstanceAppearance app;
        app.transparency = gray;
        app.focus = blur;
        sim.appearances.push_back(app);
    }
    add_noise(canvas, cfg.noise_sigma, rng);
    sim.image = std::move(canvas);
    sim.scene.severe_overlap_flags = severe_overlap_flags(sim.scene);
    return sim;
}

OracleSegmentor::OracleSegmentor(double merge_probability, int boundary_jitter_px,
                                 uint64_t seed)
    : q_(merge_probability), jitter_(boundary_jitter_px), seed_(seed) {}

void OracleSegmentor::bind_scene(const Scene& scene) {
    scene_ = scene;
    bound_ = true;
    severe_clusters_.clear();
    std::vector<bool> severe =
        scene.severe_overlap_flags ? *scene.severe_overlap_flags : severe_overlap_flags(scene);
    for (const auto& cluster : overlap_clusters(scene)) {
        if (cluster.size() < 2) continue;
        bool any_severe = false;
        for (size_t idx : cluster)
            if (severe[idx]) any_severe = true;
        if (any_severe) severe_clusters_.push_back(cluster);
    }
}

ProbabilityMaskSet OracleSegmentor::predict() const {
    if (!bound_) throw std::runtime_error("OracleSegmentor: no scene bound");
    std::mt19937_64 rng(splitmix64(seed_));
    std::vector<bool> merged_away(scene_.instances.size(), false);
    std::vector<InstanceMask> emitted;
    int64_t merge_id = 1000000;
    for (const auto& cluster : severe_clusters_) {
        if (uniform(rng, 0.0, 1.0) < q_) {
            std::vector<InstanceMask> members;
            for (size_t idx : cluster) {
                members.push_back(scene_.instances[idx]);
                merged_away[idx] = true;
            }
            emitted.push_back(merge_masks(members, merge_id++));
        }
    }
    for (size_t i = 0; i < scene_.instances.size(); ++i)
        if (!merged_away[i]) emitted.push_back(scene_.instances[i]);

    ProbabilityMaskSet out;
    out.width = scene_.width;
    out.height = scene_.height;
    for (auto& m : emitted) {
        if (jitter_ > 0) {
            int dx = uniform_int(rng, -jitter_, jitter_);
            int dy = uniform_int(rng, -jitter_, jitter_);
            m = translate_mask(m, dx, dy);
            if (m.area() == 0) continue;
        }
        Proposal p;
        p.box = bbox_of(m);
        p.box_score = 0.99;
        p.prob_grid = mask_to_prob_grid(m);
        out.proposals.push_back(std::move(p));
    }
    return out;
}

JudgmentBackend OracleSegmentor::judgment_backend() const {
    if (!bound_) throw std::runtime_error("OracleSegmentor: no scene bound");
    Scene scene = scene_;
    std::vector<InstanceMask> merges;
    int64_t merge_id = -1;
    for (const auto& cluster : overlap_clusters(scene)) {
        if (cluster.size() < 2) continue;
        std::vector<InstanceMask> members;
        for (size_t idx : cluster) members.push_back(scene.instances[idx]);
        merges.push_back(merge_masks(members, merge_id--));
    }
    return [scene, merges](const InstanceMask& mask) -> double {
        if (merges.empty()) return kGridHi;
        int label = assign_judgment_label(mask, scene.instances, merges);
        return label ? kGridHi : kGridLo;
    };
}

DecompositionBackend OracleSegmentor::decomposition_backend() const {
    if (!bound_) throw std::runtime_error("OracleSegmentor: no scene bound");
    Scene scene = scene_;
    auto clusters = overlap_clusters(scene);
    return [scene, clusters](const InstanceMask& mask) {
        // Best-matching cluster by IoU against the cluster merge.
        double best = -1.0;
        const std::vector<size_t>* best_cluster = nullptr;
        for (const auto& cluster : clusters) {
            if (cluster.size() < 2) continue;
            std::vector<InstanceMask> members;
            for (size_t idx : cluster) members.push_back(scene.instances[idx]);
            InstanceMask merged = merge_masks(members, -1);
            double iou = mask_iou(mask, merged);
            if (iou > best) {
                best = iou;
                best_cluster = &cluster;
            }
        }
        std::vector<std::pair<InstanceMask, double>> parts;
        if (best_cluster && best > 0.0)
            for (size_t idx : *best_cluster)
                parts.emplace_back(scene.instances[idx], kGridHi);
        return parts;
    };
}

GeneratorBackend procedural_generator() {
    return [](const IndexedImage& contours, uint64_t seed) -> GrayImage {
        const int w = contours.width, h = contours.height;
        for (uint8_t v : contours.px)
            if (v > 4) throw std::runtime_error("procedural_generator: unknown palette index");

        constexpr float kFill[5] = {0.f, 80.f, 160.f, 80.f, 160.f};
        constexpr double kBlur[5] = {0.0, 0.0, 0.0, 2.0, 2.0};

        GrayImage canvas(w, h, 220.f);
        for (int cat = 1; cat <= 4; ++cat) {
            // Interior of this category's contours: background flood from
            // the border blocked by category pixels; unreached = enclosed.
            std::vector<uint8_t> blocked(static_cast<size_t>(w) * h, 0);
            bool any = false;
            for (size_t p = 0; p < contours.px.size(); ++p)
                if (contours.px[p] == cat) {
                    blocked[p] = 1;
                    any = true;
                }
            if (!any) continue;
            std::vector<uint8_t> reached(blocked.size(), 0);
            std::vector<size_t> stack;
            auto push = [&](int x, int y) {
                if (x < 0 || x >= w || y < 0 || y >= h) return;
                size_t p = static_cast<size_t>(y) * w + x;
                if (!blocked[p] && !reached[p]) {
                    reached[p] = 1;
                    stack.push_back(p);
                }
            };
            for (int x = 0; x < w; ++x) {
                push(x, 0);
                push(x, h - 1);
            }
            for (int y = 0; y < h; ++y) {
                push(0, y);
                push(w - 1, y);
            }
            while (!stack.empty()) {
                size_t p = stack.back();
                stack.pop_back();
                int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
                push(x - 1, y);
                push(x + 1, y);
                push(x, y - 1);
                push(x, y + 1);
            }
            GrayImage layer(w, h, 255.f);
            for (size_t p = 0; p < blocked.size(); ++p)
                if (blocked[p] || !reached[p]) layer.px[p] = kFill[cat];
            layer = gaussian_blur(layer, kBlur[cat]);
            for (size_t p = 0; p < canvas.size(); ++p)
                canvas.px[p] = std::min(canvas.px[p], layer.px[p]);
        }
        std::mt19937_64 rng(splitmix64(seed));
        add_noise(canvas, 3.0, rng);
        return canvas;
    };
}

}  // namespace pluforge
