#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pluforge/image.hpp"
#include "pluforge/masks.hpp"

namespace pluforge {

struct InstanceAppearance {
    double transparency = 0.0;  // mean gray over the instance
    double focus = 0.0;         // Laplacian variance over the instance
    int category = 1;           // 1..4
};

struct AugmentationPolicy {
    bool translate_enabled = true;
    double translate_lo = 1.0, translate_hi = 10.0;  // pixels, sign randomized
    bool rotate_enabled = true;
    double rotate_lo = 0.0, rotate_hi = 360.0;  // degrees
    bool scale_enabled = true;
    double scale_lo = 0.9, scale_hi = 1.1;
    uint64_t seed = 0;
};

struct SynthesisConfig {
    int discriminator_scales = 3;
    double fm_weight = 10.0;
};

struct GanObjective {
    double gan_value = 0.0;
    double fm_value = 0.0;
    double combined = 0.0;
};

/// Gray image produced from a categorized contour raster. Must be
/// deterministic for a fixed input and seed.
using GeneratorBackend = std::function<GrayImage(const IndexedImage&, uint64_t seed)>;

/// Mean gray value over the mask's foreground pixels.
double instance_transparency(const GrayImage& image, const InstanceMask& mask);

/// Population variance of the 4-neighbor Laplacian over foreground pixels.
double instance_focus(const GrayImage& image, const InstanceMask& mask);

/// 2x2 split on the two thresholds: 1 + (T > t_T) + 2*(F > t_F).
int categorize(double transparency, double focus, double t_T, double t_F);

/// Medians of per-instance transparency and focus over all labeled
/// instances (images parallel to scenes).
std::pair<double, double> fit_category_thresholds(const std::vector<GrayImage>& images,
                                                  const std::vector<Scene>& scenes);

/// Rasterize each instance's contour chains at stroke width 2 in its
/// category index; intersection pixels go to the larger instance_id.
IndexedImage render_contour_image(const Scene& scene, const std::vector<int>& categories);

struct AugmentResult {
    Scene scene;
    std::vector<int64_t> dropped_ids;  // transformed off-image or below 1 px
};

/// Per-instance scale -> rotate (about centroid) -> translate with
/// nearest-neighbor resampling. Deterministic under policy.seed.
AugmentResult augment_instances(const Scene& scene, const AugmentationPolicy& policy);

GrayImage synthesize(const IndexedImage& contours, const GeneratorBackend& backend,
                     uint64_t seed = 0);

/// Scalar pix2pixHD-style objective over per-scale discriminator outputs.
GanObjective gan_objective(const std::vector<std::vector<double>>& d_real,
                           const std::vector<std::vector<double>>& d_fake,
                           const std::vector<std::vector<double>>& feats_real,
                           const std::vector<std::vector<double>>& feats_fake,
                           const SynthesisConfig& cfg);

/// Comparison routine for the contour-vs-mask efficiency property: split
/// instances into layers with no intra-layer overlap (greedy) and render
/// one label raster per layer.
std::vector<IndexedImage> layered_mask_rasters(const Scene& scene);

}  // namespace pluforge
