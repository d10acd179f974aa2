#include "pluforge/pseudo_labels.hpp"

#include <algorithm>
#include <stdexcept>

namespace pluforge {

PseudoLabelSet threshold_pseudo_labels(const ProbabilityMaskSet& raw, double theta_box,
                                       double theta_p) {
    PseudoLabelSet out;
    out.width = raw.width;
    out.height = raw.height;
    const size_t npx = static_cast<size_t>(raw.width) * raw.height;
    int64_t next_id = 1;
    for (size_t i = 0; i < raw.proposals.size(); ++i) {
        const Proposal& pr = raw.proposals[i];
        if (pr.box_score < theta_box) continue;
        if (pr.prob_grid.size() != npx)
            throw std::invalid_argument("threshold_pseudo_labels: prob_grid size mismatch");
        std::vector<uint8_t> bm(npx, 0);
        uint64_t count = 0;
        for (size_t p = 0; p < npx; ++p) {
            if (pr.prob_grid[p] >= theta_p) {
                bm[p] = 1;
                ++count;
            }
        }
        if (count == 0) continue;
        out.masks.push_back(InstanceMask::from_bitmap(raw.width, raw.height, bm, next_id++));
        out.provenance.push_back(MaskProvenance{i, pr.box_score});
    }
    return out;
}

std::vector<JudgmentSample> build_judgment_training_set(const Scene& gt) {
    std::vector<JudgmentSample> samples;
    for (const auto& m : gt.instances) {
        JudgmentSample s;
        s.mask = m;
        s.label = 1;
        s.component_masks = {m};
        samples.push_back(std::move(s));
    }
    int64_t merge_id = -1;  // negative ids keep merges distinct from instances
    for (const auto& cluster : overlap_clusters(gt)) {
        if (cluster.size() < 2) continue;
        std::vector<InstanceMask> members;
        for (size_t idx : cluster) members.push_back(gt.instances[idx]);
        JudgmentSample s;
        s.mask = merge_masks(members, merge_id--);
        s.label = 0;
        s.component_masks = std::move(members);
        samples.push_back(std::move(s));
    }
    return samples;
}

int assign_judgment_label(const InstanceMask& pred,
                          const std::vector<InstanceMask>& correct_masks,
                          const std::vector<InstanceMask>& erroneous_masks) {
    if (correct_masks.empty() && erroneous_masks.empty())
        throw std::invalid_argument("assign_judgment_label: both reference sets empty");
    double iou_c = 0.0, iou_e = 0.0;
    for (const auto& m : correct_masks) iou_c = std::max(iou_c, mask_iou(pred, m));
    for (const auto& m : erroneous_masks) iou_e = std::max(iou_e, mask_iou(pred, m));
    return iou_c > iou_e ? 1 : 0;
}

DecompositionTarget build_decomposition_target(const JudgmentSample& sample, size_t K) {
    if (sample.label != 0)
        throw std::invalid_argument("build_decomposition_target: sample is not label-0");
    if (sample.component_masks.size() > K)
        throw std::invalid_argument("build_decomposition_target: cluster of " +
                                    std::to_string(sample.component_masks.size()) +
                                    " components exceeds K=" + std::to_string(K) +
                                    " (merged mask id " + std::to_string(sample.mask.instance_id) +
                                    ")");
    std::vector<InstanceMask> ordered = sample.component_masks;
    std::sort(ordered.begin(), ordered.end(), [](const InstanceMask& a, const InstanceMask& b) {
        uint64_t aa = a.area(), ab = b.area();
        if (aa != ab) return aa > ab;
        return a.instance_id < b.instance_id;
    });
    DecompositionTarget t;
    t.k = ordered.size();
    t.slots.assign(K, std::nullopt);
    t.existence.assign(K, false);
    for (size_t i = 0; i < ordered.size(); ++i) {
        t.slots[i] = ordered[i];
        t.existence[i] = true;
    }
    return t;
}

PseudoLabelSet apply_plu(const PseudoLabelSet& pseudo, const JudgmentBackend& judge,
                         const DecompositionBackend& decompose, double judge_threshold,
                         double exist_threshold) {
    PseudoLabelSet out;
    out.width = pseudo.width;
    out.height = pseudo.height;
    int64_t next_id = 1;
    for (const auto& m : pseudo.masks) next_id = std::max(next_id, m.instance_id + 1);

    for (size_t i = 0; i < pseudo.masks.size(); ++i) {
        const InstanceMask& m = pseudo.masks[i];
        double prob;
        try {
            prob = judge(m);
        } catch (const std::exception& e) {
            throw std::runtime_error("apply_plu: judgment backend failed on mask " +
                                     std::to_string(m.instance_id) + ": " + e.what());
        }
        if (prob >= judge_threshold) {
            out.masks.push_back(m);
            out.provenance.push_back(pseudo.provenance[i]);
            continue;
        }
        std::vector<std::pair<InstanceMask, double>> parts;
        try {
            parts = decompose(m);
        } catch (const std::exception& e) {
            throw std::runtime_error("apply_plu: decomposition backend failed on mask " +
                                     std::to_string(m.instance_id) + ": " + e.what());
        }
        CorrectionEntry entry;
        entry.original_id = m.instance_id;
        std::vector<InstanceMask> survivors;
        for (auto& [part, exist] : parts)
            if (exist >= exist_threshold) survivors.push_back(part);
        if (survivors.empty()) {
            entry.reason = "kept:decomposition-empty";
            out.masks.push_back(m);
            out.provenance.push_back(pseudo.provenance[i]);
        } else {
            entry.reason = "decomposed";
            for (auto& part : survivors) {
                part.instance_id = next_id++;
                entry.replacement_ids.push_back(part.instance_id);
                out.masks.push_back(std::move(part));
                out.provenance.push_back(pseudo.provenance[i]);
            }
        }
        out.correction_log.push_back(std::move(entry));
    }
    return out;
}

}  // namespace pluforge
