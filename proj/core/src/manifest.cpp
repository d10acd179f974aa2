#include "pluforge/manifest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "pluforge/image.hpp"

namespace pluforge {

using ordered_json = nlohmann::ordered_json;

namespace {

/// Round to 9 significant digits so serialized numbers are stable across
/// round-trips.
double canon(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    std::ostringstream ss;
    ss.precision(9);
    ss << v;
    return std::stod(ss.str());
}

ordered_json annotation_to_json(const ManifestAnnotation& a) {
    ordered_json j;
    j["instance_id"] = a.instance_id;
    j["rle"] = a.rle;
    if (a.score) j["score"] = canon(*a.score);
    if (a.category) j["category"] = *a.category;
    if (a.severe_overlap) j["severe_overlap"] = *a.severe_overlap;
    return j;
}

ManifestAnnotation annotation_from_json(const ordered_json& j) {
    ManifestAnnotation a;
    a.instance_id = j.at("instance_id").get<int64_t>();
    a.rle = j.at("rle").get<std::vector<uint32_t>>();
    if (j.contains("score")) a.score = j["score"].get<double>();
    if (j.contains("category")) a.category = j["category"].get<int>();
    if (j.contains("severe_overlap")) a.severe_overlap = j["severe_overlap"].get<bool>();
    return a;
}

}  // namespace

Manifest load_manifest(const std::string& path, bool check_files) {
    std::ifstream f(path);
    if (!f) throw ManifestError("io", "cannot open manifest: " + path);
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ManifestError("parse", std::string("malformed manifest JSON: ") + e.what());
    }
    Manifest m;
    if (!j.contains("version") || j["version"].get<std::string>() != kManifestVersion)
        throw ManifestError("version", "manifest schema-version mismatch (want " +
                                           std::string(kManifestVersion) + ")");
    for (const auto& ji : j.at("images")) {
        ManifestImage img;
        img.path = ji.at("path").get<std::string>();
        img.width = ji.at("width").get<int>();
        img.height = ji.at("height").get<int>();
        if (img.width <= 0 || img.height <= 0)
            throw ManifestError("dims", "non-positive image dimensions for " + img.path);
        if (check_files && !img.path.empty() && !std::filesystem::exists(img.path))
            throw ManifestError("missing-file", "referenced file does not exist: " + img.path);
        std::unordered_set<int64_t> ids;
        for (const auto& ja : ji.value("annotations", ordered_json::array())) {
            ManifestAnnotation a = annotation_from_json(ja);
            uint64_t sum = 0;
            for (uint32_t r : a.rle) sum += r;
            if (sum != static_cast<uint64_t>(img.width) * img.height)
                throw ManifestError("rle-sum", "RLE does not sum to width*height (image " +
                                                   img.path + ", instance " +
                                                   std::to_string(a.instance_id) + ")");
            if (!ids.insert(a.instance_id).second)
                throw ManifestError("dup-id", "duplicate instance_id in image " + img.path);
            img.annotations.push_back(std::move(a));
        }
        if (ji.contains("provenance")) {
            for (const auto& jp : ji["provenance"])
                img.provenance.push_back(MaskProvenance{jp.at("proposal_index").get<size_t>(),
                                                        jp.at("box_score").get<double>()});
        }
        if (ji.contains("correction_log")) {
            for (const auto& jc : ji["correction_log"]) {
                CorrectionEntry e;
                e.original_id = jc.at("original_id").get<int64_t>();
                e.replacement_ids = jc.at("replacement_ids").get<std::vector<int64_t>>();
                e.reason = jc.at("reason").get<std::string>();
                img.correction_log.push_back(std::move(e));
            }
        }
        m.images.push_back(std::move(img));
    }
    return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
    ordered_json j;
    j["version"] = m.version;
    j["images"] = ordered_json::array();
    for (const auto& img : m.images) {
        ordered_json ji;
        ji["path"] = img.path;
        ji["width"] = img.width;
        ji["height"] = img.height;
        ji["annotations"] = ordered_json::array();
        for (const auto& a : img.annotations) ji["annotations"].push_back(annotation_to_json(a));
        if (!img.provenance.empty()) {
            ji["provenance"] = ordered_json::array();
            for (const auto& p : img.provenance)
                ji["provenance"].push_back(
                    {{"proposal_index", p.proposal_index}, {"box_score", canon(p.box_score)}});
        }
        if (!img.correction_log.empty()) {
            ji["correction_log"] = ordered_json::array();
            for (const auto& e : img.correction_log)
                ji["correction_log"].push_back({{"original_id", e.original_id},
                                                {"replacement_ids", e.replacement_ids},
                                                {"reason", e.reason}});
        }
        j["images"].push_back(std::move(ji));
    }
    write_file_atomic(path, j.dump(2) + "\n");
}

Scene scene_from_manifest(const ManifestImage& img) {
    Scene s;
    s.image_path = img.path;
    s.width = img.width;
    s.height = img.height;
    bool any_flag = false;
    std::vector<bool> flags;
    for (const auto& a : img.annotations) {
        InstanceMask m;
        m.width = img.width;
        m.height = img.height;
        m.runs = a.rle;
        m.instance_id = a.instance_id;
        m.validate();
        s.instances.push_back(std::move(m));
        flags.push_back(a.severe_overlap.value_or(false));
        if (a.severe_overlap) any_flag = true;
    }
    if (any_flag) s.severe_overlap_flags = flags;
    s.validate();
    return s;
}

ManifestImage manifest_from_scene(const Scene& scene, const std::vector<double>* scores,
                                  const std::vector<int>* categories) {
    ManifestImage img;
    img.path = scene.image_path;
    img.width = scene.width;
    img.height = scene.height;
    for (size_t i = 0; i < scene.instances.size(); ++i) {
        ManifestAnnotation a;
        a.instance_id = scene.instances[i].instance_id;
        a.rle = scene.instances[i].runs;
        if (scores) a.score = (*scores)[i];
        if (categories) a.category = (*categories)[i];
        if (scene.severe_overlap_flags) a.severe_overlap = (*scene.severe_overlap_flags)[i];
        img.annotations.push_back(std::move(a));
    }
    return img;
}

ManifestImage manifest_from_pseudo(const std::string& image_path, const PseudoLabelSet& set) {
    ManifestImage img;
    img.path = image_path;
    img.width = set.width;
    img.height = set.height;
    for (size_t i = 0; i < set.masks.size(); ++i) {
        ManifestAnnotation a;
        a.instance_id = set.masks[i].instance_id;
        a.rle = set.masks[i].runs;
        a.score = set.provenance[i].box_score;
        img.annotations.push_back(std::move(a));
    }
    img.provenance = set.provenance;
    img.correction_log = set.correction_log;
    return img;
}

std::string export_coco_json(const Manifest& m) {
    ordered_json j;
    j["images"] = ordered_json::array();
    j["annotations"] = ordered_json::array();
    j["categories"] = ordered_json::array({{{"id", 1}, {"name", "organoid"}}});
    int64_t img_id = 1, ann_id = 1;
    for (const auto& img : m.images) {
        j["images"].push_back({{"id", img_id},
                               {"file_name", img.path},
                               {"width", img.width},
                               {"height", img.height}});
        for (const auto& a : img.annotations) {
            InstanceMask mask;
            mask.width = img.width;
            mask.height = img.height;
            mask.runs = a.rle;
            mask.instance_id = a.instance_id;
            BoundingBox bb = bbox_of(mask);
            ordered_json ja;
            ja["id"] = ann_id++;  // id remapping is the lossy part of this export
            ja["image_id"] = img_id;
            ja["category_id"] = 1;
            ja["segmentation"] = {{"size", {img.height, img.width}},
                                  {"counts", to_coco_rle(mask)}};
            ja["area"] = mask.area();
            ja["bbox"] = {bb.x, bb.y, bb.w, bb.h};
            ja["iscrowd"] = 0;
            if (a.score) ja["score"] = canon(*a.score);
            j["annotations"].push_back(std::move(ja));
        }
        ++img_id;
    }
    return j.dump(2) + "\n";
}

}  // namespace pluforge
