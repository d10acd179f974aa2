#pragma once

#include <cstdint>
#include <vector>

#include "pluforge/image.hpp"
#include "pluforge/masks.hpp"
#include "pluforge/pseudo_labels.hpp"
#include "pluforge/synthesis.hpp"

namespace pluforge {

struct SimConfig {
    int width = 128;
    int height = 128;
    int n_instances_lo = 3, n_instances_hi = 8;
    double axis_lo = 6.0, axis_hi = 18.0;  // ellipse semi-axes, pixels
    double overlap_bias = 0.3;             // placement pull toward existing instances
    double transparency_lo = 60.0, transparency_hi = 180.0;
    double focus_blur_lo = 0.0, focus_blur_hi = 2.5;  // per-instance blur sigma
    double background_gray = 220.0;
    double noise_sigma = 3.0;
    uint64_t seed = 0;
};

struct SimScene {
    GrayImage image;
    Scene scene;
    std::vector<InstanceAppearance> appearances;  // assigned, not measured
};

/// Rotated ellipses rejection-sampled toward overlap, rendered with
/// min-blend compositing (darker wins) plus seeded Gaussian noise. Exact
/// per-instance masks; severe_overlap_flags populated.
SimScene generate_scene(const SimConfig& cfg, uint64_t seed);

/// Deterministic ground-truth-driven segmentor stand-in. predict() returns
/// GT masks as near-binary probability grids; with probability q each
/// severely-overlapping cluster is emitted as its merged mask instead.
/// judge() and decompose() are exact oracles over the bound scene.
class OracleSegmentor {
  public:
    OracleSegmentor(double merge_probability, int boundary_jitter_px, uint64_t seed);

    void bind_scene(const Scene& scene);

    ProbabilityMaskSet predict() const;
    JudgmentBackend judgment_backend() const;
    DecompositionBackend decomposition_backend() const;

  private:
    double q_;
    int jitter_;
    uint64_t seed_;
    Scene scene_;
    bool bound_ = false;
    std::vector<std::vector<size_t>> severe_clusters_;
};

/// The category-faithful procedural stand-in for the learned generator:
/// even-odd fill of each contour interior with a per-category gray and
/// blur, over background 220, plus seeded additive noise sigma=3.
GeneratorBackend procedural_generator();

}  // namespace pluforge
