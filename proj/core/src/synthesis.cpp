#include "pluforge/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "pluforge/losses.hpp"

namespace pluforge {

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

}  // namespace

double instance_transparency(const GrayImage& image, const InstanceMask& mask) {
    if (image.width != mask.width || image.height != mask.height)
        throw std::invalid_argument("instance_transparency: dimension mismatch");
    auto bm = mask.to_bitmap();
    double sum = 0.0;
    uint64_t n = 0;
    for (size_t i = 0; i < bm.size(); ++i) {
        if (bm[i]) {
            sum += image.px[i];
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("instance_transparency: empty mask");
    return sum / static_cast<double>(n);
}

double instance_focus(const GrayImage& image, const InstanceMask& mask) {
    if (image.width != mask.width || image.height != mask.height)
        throw std::invalid_argument("instance_focus: dimension mismatch");
    GrayImage lap = laplacian(image);
    auto bm = mask.to_bitmap();
    double sum = 0.0;
    uint64_t n = 0;
    for (size_t i = 0; i < bm.size(); ++i) {
        if (bm[i]) {
            sum += lap.px[i];
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("instance_focus: empty mask");
    double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (size_t i = 0; i < bm.size(); ++i) {
        if (bm[i]) {
            double d = lap.px[i] - mean;
            var += d * d;
        }
    }
    return var / static_cast<double>(n);
}

int categorize(double transparency, double focus, double t_T, double t_F) {
    return 1 + (transparency > t_T ? 1 : 0) + (focus > t_F ? 2 : 0);
}

std::pair<double, double> fit_category_thresholds(const std::vector<GrayImage>& images,
                                                  const std::vector<Scene>& scenes) {
    if (images.size() != scenes.size())
        throw std::invalid_argument("fit_category_thresholds: images/scenes size mismatch");
    std::vector<double> ts, fs;
    for (size_t s = 0; s < scenes.size(); ++s) {
        for (const auto& m : scenes[s].instances) {
            ts.push_back(instance_transparency(images[s], m));
            fs.push_back(instance_focus(images[s], m));
        }
    }
    if (ts.empty()) throw std::invalid_argument("fit_category_thresholds: no instances");
    return {median(ts), median(fs)};
}

IndexedImage render_contour_image(const Scene& scene, const std::vector<int>& categories) {
    if (categories.size() != scene.instances.size())
        throw std::invalid_argument("render_contour_image: categories size mismatch");
    IndexedImage out(scene.width, scene.height);
    // Ascending id order so the larger id overwrites at intersections.
    std::vector<size_t> order(scene.instances.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scene.instances[a].instance_id < scene.instances[b].instance_id;
    });
    for (size_t i : order) {
        int cat = categories[i];
        if (cat < 1 || cat > 4)
            throw std::invalid_argument("render_contour_image: category out of range");
        const uint8_t v = static_cast<uint8_t>(cat);
        const int W = out.width, H = out.height;
        uint8_t* base = out.px.data();
        for (const auto& chain : extract_contour(scene.instances[i])) {
            for (auto [x, y] : chain.pixels) {
                // stroke width 2: 2x2 dilation of the chain pixel
                if (x >= 0 && x + 1 < W && y >= 0 && y + 1 < H) {
                    uint8_t* r = base + static_cast<size_t>(y) * W + x;
                    r[0] = r[1] = v;
                    r[W] = r[W + 1] = v;
                } else {
                    for (int dy = 0; dy <= 1; ++dy)
                        for (int dx = 0; dx <= 1; ++dx) {
                            int px = x + dx, py = y + dy;
                            if (px >= 0 && px < W && py >= 0 && py < H) out.at(px, py) = v;
                        }
                }
            }
        }
    }
    return out;
}

AugmentResult augment_instances(const Scene& scene, const AugmentationPolicy& policy) {
    AugmentResult result;
    result.scene.image_path = scene.image_path;
    result.scene.width = scene.width;
    result.scene.height = scene.height;
    const int w = scene.width, h = scene.height;

    for (const auto& m : scene.instances) {
        std::mt19937_64 rng(splitmix64(policy.seed ^
                                       splitmix64(static_cast<uint64_t>(m.instance_id))));
        double s = policy.scale_enabled ? uniform(rng, policy.scale_lo, policy.scale_hi) : 1.0;
        double theta = policy.rotate_enabled
                           ? uniform(rng, policy.rotate_lo, policy.rotate_hi) *
                                 std::numbers::pi / 180.0
                           : 0.0;
        double tx = 0.0, ty = 0.0;
        if (policy.translate_enabled) {
            tx = uniform(rng, policy.translate_lo, policy.translate_hi);
            ty = uniform(rng, policy.translate_lo, policy.translate_hi);
            if (rng() & 1) tx = -tx;
            if (rng() & 1) ty = -ty;
        }

        auto bm = m.to_bitmap();
        double cx = 0.0, cy = 0.0;
        uint64_t n = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (bm[static_cast<size_t>(y) * w + x]) {
                    cx += x + 0.5;
                    cy += y + 0.5;
                    ++n;
                }
        cx /= static_cast<double>(n);
        cy /= static_cast<double>(n);

        // Forward map: p' = R*S*(p - c) + c + t. Sample by the inverse with
        // nearest-neighbor lookup so masks stay binary.
        const double cosr = std::cos(theta), sinr = std::sin(theta);
        std::vector<uint8_t> out_bm(static_cast<size_t>(w) * h, 0);
        uint64_t count = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double px = x + 0.5 - cx - tx;
                double py = y + 0.5 - cy - ty;
                double rx = cosr * px + sinr * py;   // R^{-1}
                double ry = -sinr * px + cosr * py;
                double qx = rx / s + cx;
                double qy = ry / s + cy;
                int sx = static_cast<int>(std::floor(qx));
                int sy = static_cast<int>(std::floor(qy));
                if (sx < 0 || sx >= w || sy < 0 || sy >= h) continue;
                if (bm[static_cast<size_t>(sy) * w + sx]) {
                    out_bm[static_cast<size_t>(y) * w + x] = 1;
                    ++count;
                }
            }
        if (count == 0) {
            result.dropped_ids.push_back(m.instance_id);
            continue;
        }
        result.scene.instances.push_back(
            InstanceMask::from_bitmap(w, h, out_bm, m.instance_id));
    }
    return result;
}

GrayImage synthesize(const IndexedImage& contours, const GeneratorBackend& backend,
                     uint64_t seed) {
    GrayImage out;
    try {
        out = backend(contours, seed);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("synthesize: generator backend failed: ") +
                                 e.what());
    }
    if (out.width != contours.width || out.height != contours.height)
        throw std::runtime_error("synthesize: backend returned mismatched dimensions");
    return out;
}

GanObjective gan_objective(const std::vector<std::vector<double>>& d_real,
                           const std::vector<std::vector<double>>& d_fake,
                           const std::vector<std::vector<double>>& feats_real,
                           const std::vector<std::vector<double>>& feats_fake,
                           const SynthesisConfig& cfg) {
    const size_t scales = static_cast<size_t>(cfg.discriminator_scales);
    if (d_real.size() != scales || d_fake.size() != scales ||
        feats_real.size() != scales || feats_fake.size() != scales)
        throw std::invalid_argument("gan_objective: scale count mismatch");
    GanObjective obj;
    for (size_t s = 0; s < scales; ++s) {
        if (d_real[s].size() != d_fake[s].size() || d_real[s].empty())
            throw std::invalid_argument("gan_objective: discriminator shape mismatch");
        if (feats_real[s].size() != feats_fake[s].size() || feats_real[s].empty())
            throw std::invalid_argument("gan_objective: feature shape mismatch");
        double lr = 0.0, lf = 0.0;
        for (double p : d_real[s]) lr += std::log(std::clamp(p, kProbEps, 1.0 - kProbEps));
        for (double p : d_fake[s])
            lf += std::log(1.0 - std::clamp(p, kProbEps, 1.0 - kProbEps));
        obj.gan_value += lr / static_cast<double>(d_real[s].size()) +
                         lf / static_cast<double>(d_fake[s].size());
        double fm = 0.0;
        for (size_t i = 0; i < feats_real[s].size(); ++i)
            fm += std::abs(feats_real[s][i] - feats_fake[s][i]);
        obj.fm_value += fm / static_cast<double>(feats_real[s].size());
    }
    obj.combined = obj.gan_value + cfg.fm_weight * obj.fm_value;
    return obj;
}

std::vector<IndexedImage> layered_mask_rasters(const Scene& scene) {
    std::vector<std::vector<size_t>> layers;
    for (size_t i = 0; i < scene.instances.size(); ++i) {
        bool placed = false;
        for (auto& layer : layers) {
            bool clash = false;
            for (size_t j : layer)
                if (mask_intersection(scene.instances[i], scene.instances[j]) > 0) {
                    clash = true;
                    break;
                }
            if (!clash) {
                layer.push_back(i);
                placed = true;
                break;
            }
        }
        if (!placed) layers.push_back({i});
    }
    std::vector<IndexedImage> rasters;
    for (const auto& layer : layers) {
        IndexedImage img(scene.width, scene.height);
        for (size_t i : layer) {
            uint8_t label = static_cast<uint8_t>(i % 254 + 1);
            const auto& m = scene.instances[i];
            size_t pos = 0;
            bool fg = false;
            for (uint32_t r : m.runs) {
                if (fg)
                    for (uint32_t k = 0; k < r; ++k) img.px[pos + k] = label;
                pos += r;
                fg = !fg;
            }
        }
        rasters.push_back(std::move(img));
    }
    if (rasters.empty()) rasters.emplace_back(scene.width, scene.height);
    return rasters;
}

}  // namespace pluforge
