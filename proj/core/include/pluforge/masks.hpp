#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pluforge {

/// One instance's binary mask, run-length encoded row-major over the full
/// image grid. Runs alternate background/foreground starting with a
/// (possibly zero-length) background run. Overlapping instances coexist as
/// separate masks.
struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<uint32_t> runs;
    int64_t instance_id = 0;

    /// Encode a row-major bitmap (nonzero = foreground).
    static InstanceMask from_bitmap(int width, int height,
                                    const std::vector<uint8_t>& bitmap,
                                    int64_t instance_id);

    std::vector<uint8_t> to_bitmap() const;
    uint64_t area() const;  // foreground pixel count
    bool empty() const { return area() == 0; }

    /// Checks run-sum and alternation invariants; throws on violation.
    void validate() const;
};

struct BoundingBox {
    int x = 0, y = 0, w = 0, h = 0;
    bool operator==(const BoundingBox&) const = default;
};

/// An image reference plus its instance masks; the unit of annotation,
/// simulation, and evaluation.
struct Scene {
    std::string image_path;
    int width = 0;
    int height = 0;
    std::vector<InstanceMask> instances;
    std::optional<std::vector<bool>> severe_overlap_flags;

    /// Throws if instance dims mismatch, ids collide, or a mask is empty.
    void validate() const;
};

/// Boundary pixel chain from Moore tracing. Outer chains walk foreground
/// pixels; hole chains walk the enclosed background pixels.
struct ContourChain {
    std::vector<std::pair<int, int>> pixels;  // (x, y), closed implicitly
    bool is_hole = false;
};

// ---- operations ------------------------------------------------------------

double mask_iou(const InstanceMask& a, const InstanceMask& b);

/// Pixelwise union. new_id becomes the result's instance_id.
InstanceMask merge_masks(const std::vector<InstanceMask>& masks, int64_t new_id);

/// flag[i] = true iff the fraction of instance i's area shared with any
/// other instance strictly exceeds the threshold.
std::vector<bool> severe_overlap_flags(const Scene& scene, double threshold = 1.0 / 3.0);

/// Moore boundary tracing, 8-connected foreground. One outer chain per
/// connected component; one hole chain per enclosed background component.
/// Outer chains first, then holes, each group in raster order of its seed.
std::vector<ContourChain> extract_contour(const InstanceMask& mask);

BoundingBox bbox_of(const InstanceMask& mask);

/// Intersection pixel count between two masks of equal dims.
uint64_t mask_intersection(const InstanceMask& a, const InstanceMask& b);

/// Row-major runs -> COCO's column-major uncompressed RLE counts.
std::vector<uint32_t> to_coco_rle(const InstanceMask& mask);

/// Connected components of the "shares >= 1 pixel" relation between
/// instances; each cluster is a list of instance indices, singletons
/// included. Deterministic: clusters ordered by smallest member index.
std::vector<std::vector<size_t>> overlap_clusters(const Scene& scene);

}  // namespace pluforge
