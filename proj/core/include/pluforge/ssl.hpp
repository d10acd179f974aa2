#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pluforge/image.hpp"
#include "pluforge/losses.hpp"
#include "pluforge/masks.hpp"
#include "pluforge/pseudo_labels.hpp"
#include "pluforge/synthesis.hpp"

namespace pluforge {

/// Opaque flat parameter vector exchanged with backends.
struct WeightVector {
    std::vector<double> values;
    std::string schema_tag;
};

struct TrainingSchedule {
    uint64_t total_iterations = 180000;
    uint64_t warmup_iterations = 1000;
    double base_lr = 0.001;
    double decay_factor = 0.1;  // applied at the 80% and 90% milestones
    size_t labeled_per_batch = 4;
    size_t unlabeled_per_batch = 2;
    double ema_decay = 0.999;
    uint64_t ema_period = 1;
    double lambda_ssl = 1.0;
};

/// Per-element m*teacher + (1-m)*student; vectors must share length and tag.
WeightVector ema_update(const WeightVector& teacher, const WeightVector& student, double decay);

/// Linear warmup to base_lr, then step decay at 80% and 90% of the total.
double lr_at(uint64_t iteration, const TrainingSchedule& sched);

struct Batch {
    std::vector<size_t> labeled;
    std::vector<size_t> unlabeled;
    bool sampled_with_replacement = false;  // pool smaller than quota
};

/// Uniform sampling without replacement within a batch.
Batch compose_batch(size_t labeled_pool, size_t unlabeled_pool, const TrainingSchedule& sched,
                    std::mt19937_64& rng);

// ---- augmentations ---------------------------------------------------------

/// Exact horizontal mirror of image and all masks.
void hflip_scene(GrayImage& image, Scene& scene);

/// Uniform scale about the image center, nearest neighbor, masks included.
void scale_scene(GrayImage& image, Scene& scene, double factor);

struct WeakAugmentConfig {
    bool flip_enabled = true;    // probability 0.5
    bool scale_enabled = true;   // uniform in [0.9, 1.1]
    double scale_lo = 0.9, scale_hi = 1.1;
};

void weak_augment(GrayImage& image, Scene& labels, std::mt19937_64& rng,
                  const WeakAugmentConfig& cfg = {});

struct StrongAugmentConfig {
    bool jitter_enabled = true;     // brightness/contrast +-20%, p=0.5
    bool grayscale_enabled = true;  // 50% contrast flattening, p=0.5
    bool blur_enabled = true;       // sigma in [0.5, 2], p=0.5
    bool cutout_enabled = true;     // one rect, 2-10% of area, mean fill, p=0.5
};

void strong_augment(GrayImage& image, std::mt19937_64& rng,
                    const StrongAugmentConfig& cfg = {});

// ---- backend contracts -----------------------------------------------------

/// Teacher side of the mean-teacher pair. The scene context parameter is
/// how oracle implementations see ground truth; learned backends ignore it.
class TeacherBackend {
  public:
    virtual ~TeacherBackend() = default;
    virtual ProbabilityMaskSet predict(const GrayImage& image, const Scene& context) = 0;
    virtual JudgmentBackend judgment(const Scene& context) = 0;
    virtual DecompositionBackend decomposition(const Scene& context) = 0;
    virtual WeightVector weights() const = 0;
    virtual void set_weights(const WeightVector& w) = 0;
};

/// Student side: one train_step call per stream, returning the mean loss
/// components over the stream's samples.
class StudentBackend {
  public:
    virtual ~StudentBackend() = default;
    virtual SlComponents train_step(
        const std::vector<std::pair<GrayImage, Scene>>& samples) = 0;
    virtual WeightVector weights() const = 0;
    virtual void set_weights(const WeightVector& w) = 0;
};

/// Oracle teacher over per-call scene context; see OracleSegmentor.
class OracleTeacher : public TeacherBackend {
  public:
    OracleTeacher(double merge_probability, int boundary_jitter_px, uint64_t seed,
                  size_t weight_dim = 16);
    ProbabilityMaskSet predict(const GrayImage& image, const Scene& context) override;
    JudgmentBackend judgment(const Scene& context) override;
    DecompositionBackend decomposition(const Scene& context) override;
    WeightVector weights() const override { return weights_; }
    void set_weights(const WeightVector& w) override { weights_ = w; }

  private:
    double q_;
    int jitter_;
    uint64_t seed_;
    uint64_t calls_ = 0;
    WeightVector weights_;
};

/// Deterministic loss evaluator standing in for a trained segmentor: the
/// components are closed-form functions of (image, labels) via the loss
/// library. Weights change only through set_weights.
class ReferenceStudent : public StudentBackend {
  public:
    explicit ReferenceStudent(size_t weight_dim = 16, uint64_t seed = 0);
    SlComponents train_step(
        const std::vector<std::pair<GrayImage, Scene>>& samples) override;
    WeightVector weights() const override { return weights_; }
    void set_weights(const WeightVector& w) override { weights_ = w; }

  private:
    WeightVector weights_;
    uint64_t steps_ = 0;
};

// ---- training round --------------------------------------------------------

struct LabeledSample {
    GrayImage image;
    Scene gt;
};

/// hidden_gt is never read by the orchestrator; it is forwarded to the
/// teacher as scene context so oracle backends can look up ground truth.
struct UnlabeledSample {
    GrayImage image;
    Scene hidden_gt;
};

struct RoundConfig {
    TrainingSchedule schedule;
    LossWeights loss_weights;
    AugmentationPolicy ia_policy;
    WeakAugmentConfig weak_cfg;
    StrongAugmentConfig strong_cfg;
    bool weak_aug_enabled = true;
    bool strong_aug_enabled = true;
    double theta_box = 0.7;
    double theta_p = 0.5;
    double judge_threshold = 0.5;
    double exist_threshold = 0.5;
};

struct RoundReport {
    uint64_t iteration = 0;
    double lr = 0.0;
    SlComponents real, pseudo, synthetic;
    double l_real = 0.0, l_pseudo = 0.0, l_synthetic = 0.0, total = 0.0;
    size_t corrections = 0;       // merged pseudo-labels replaced
    size_t kept_degenerate = 0;   // judged erroneous but kept (empty decomposition)
    size_t pseudo_mask_count = 0;
    size_t synthesized_images = 0;
    size_t augment_dropped = 0;
    bool ema_applied = false;
};

/// One SA-SSL iteration: weak-augment the unlabeled batch, teacher predict,
/// threshold, PLU, contour synthesis, three-stream student step, loss
/// assembly, and the periodic EMA weight swap.
RoundReport run_round(uint64_t iteration, TeacherBackend& teacher, StudentBackend& student,
                      const GeneratorBackend& generator,
                      const std::vector<LabeledSample>& labeled_pool,
                      const std::vector<UnlabeledSample>& unlabeled_pool,
                      const RoundConfig& cfg, std::mt19937_64& rng);

/// Burn-in probe: the teacher must emit at least one proposal here before
/// round 1.
bool probe_teacher(TeacherBackend& teacher, const GrayImage& image, const Scene& context);

}  // namespace pluforge
