#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pluforge/masks.hpp"

namespace pluforge {

/// Raw model output for one image: per-proposal box, score, and the
/// per-pixel foreground probability grid over the full image.
struct Proposal {
    BoundingBox box;
    double box_score = 0.0;
    std::vector<double> prob_grid;  // row-major, width*height
};

struct ProbabilityMaskSet {
    int width = 0;
    int height = 0;
    std::vector<Proposal> proposals;
};

struct MaskProvenance {
    size_t proposal_index = 0;
    double box_score = 0.0;
};

struct CorrectionEntry {
    int64_t original_id = 0;
    std::vector<int64_t> replacement_ids;  // empty = kept, see `reason`
    std::string reason;                    // "decomposed" or "kept:<why>"
};

struct PseudoLabelSet {
    int width = 0;
    int height = 0;
    std::vector<InstanceMask> masks;
    std::vector<MaskProvenance> provenance;  // parallel to masks
    std::vector<CorrectionEntry> correction_log;
};

struct JudgmentSample {
    InstanceMask mask;
    int label = 1;  // 1 = correct, 0 = erroneous (merged)
    std::vector<InstanceMask> component_masks;
};

struct DecompositionTarget {
    size_t k = 0;
    std::vector<std::optional<InstanceMask>> slots;  // size K
    std::vector<bool> existence;                     // size K
};

/// Per-mask correctness probability, given the mask and its scene context.
using JudgmentBackend = std::function<double(const InstanceMask&)>;
/// Constituent masks with existence probabilities for a mask judged erroneous.
using DecompositionBackend =
    std::function<std::vector<std::pair<InstanceMask, double>>(const InstanceMask&)>;

/// Box-score filter then per-pixel thresholding (foreground iff P >= theta_p);
/// proposals whose thresholded mask is empty are dropped.
PseudoLabelSet threshold_pseudo_labels(const ProbabilityMaskSet& raw,
                                       double theta_box = 0.7, double theta_p = 0.5);

/// One label-1 sample per GT instance, one label-0 sample per maximal
/// overlapping cluster of >= 2 instances (mask = merged cluster).
std::vector<JudgmentSample> build_judgment_training_set(const Scene& gt);

/// 1 iff max IoU against correct masks strictly beats max IoU against
/// erroneous ones.
int assign_judgment_label(const InstanceMask& pred,
                          const std::vector<InstanceMask>& correct_masks,
                          const std::vector<InstanceMask>& erroneous_masks);

/// Slot targets for a label-0 sample: components ordered by descending
/// area (id tiebreak) into the first k of K slots.
DecompositionTarget build_decomposition_target(const JudgmentSample& sample, size_t K = 5);

/// Replace masks judged erroneous (prob < judge_threshold) with the
/// decomposition backend's surviving slots (existence >= exist_threshold);
/// zero survivors keep the original. Every decision lands in correction_log.
PseudoLabelSet apply_plu(const PseudoLabelSet& pseudo, const JudgmentBackend& judge,
                         const DecompositionBackend& decompose,
                         double judge_threshold = 0.5, double exist_threshold = 0.5);

}  // namespace pluforge
