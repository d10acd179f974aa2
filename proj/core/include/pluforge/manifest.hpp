#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pluforge/masks.hpp"
#include "pluforge/pseudo_labels.hpp"

namespace pluforge {

inline constexpr const char* kManifestVersion = "plu-forge/1";

struct ManifestAnnotation {
    int64_t instance_id = 0;
    std::vector<uint32_t> rle;
    std::optional<double> score;
    std::optional<int> category;  // 1..4
    std::optional<bool> severe_overlap;
};

struct ManifestImage {
    std::string path;
    int width = 0;
    int height = 0;
    std::vector<ManifestAnnotation> annotations;
    std::vector<MaskProvenance> provenance;       // optional, parallel to annotations
    std::vector<CorrectionEntry> correction_log;  // optional
};

struct Manifest {
    std::string version = kManifestVersion;
    std::vector<ManifestImage> images;
};

/// Validation error with machine-parsable code for the CLI's ERR:<code>:
/// prefix convention.
struct ManifestError : std::runtime_error {
    std::string code;
    ManifestError(std::string c, const std::string& what)
        : std::runtime_error(what), code(std::move(c)) {}
};

/// Parse + validate (version tag, RLE sums, unique ids). check_files adds
/// an existence check on referenced image paths.
Manifest load_manifest(const std::string& path, bool check_files = false);

/// Canonical serialization: fixed key order, numbers at <= 9 significant
/// digits, two-space indent, atomic write.
void save_manifest(const Manifest& m, const std::string& path);

Scene scene_from_manifest(const ManifestImage& img);
ManifestImage manifest_from_scene(const Scene& scene,
                                  const std::vector<double>* scores = nullptr,
                                  const std::vector<int>* categories = nullptr);
ManifestImage manifest_from_pseudo(const std::string& image_path,
                                   const PseudoLabelSet& set);

/// COCO-convention export: column-major RLE counts, sequential ids.
std::string export_coco_json(const Manifest& m);

}  // namespace pluforge
