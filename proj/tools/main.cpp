// pluforge command-line surface: simulation, pseudo-label pipelines,
// contour synthesis, metrics, and the SA-SSL training loop over the
// reference backends.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "pluforge/eval.hpp"
#include "pluforge/fid.hpp"
#include "pluforge/image.hpp"
#include "pluforge/losses.hpp"
#include "pluforge/manifest.hpp"
#include "pluforge/masks.hpp"
#include "pluforge/pseudo_labels.hpp"
#include "pluforge/simulator.hpp"
#include "pluforge/ssl.hpp"
#include "pluforge/synthesis.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pluforge;

namespace {

[[noreturn]] void fail(int exit_code, const std::string& code, const std::string& msg) {
    std::cerr << "ERR:" << code << ": " << msg << "\n";
    std::exit(exit_code);
}

std::string fmt9(double v) {
    std::ostringstream ss;
    ss.precision(9);
    ss << v;
    return ss.str();
}

ordered_json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(1, "io", "cannot open: " + path);
    ordered_json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        fail(1, "parse", std::string("malformed JSON in ") + path + ": " + e.what());
    }
    return j;
}

SimConfig sim_config_from_json(const ordered_json& j) {
    SimConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.n_instances_lo = j.value("n_instances_lo", c.n_instances_lo);
    c.n_instances_hi = j.value("n_instances_hi", c.n_instances_hi);
    c.axis_lo = j.value("axis_lo", c.axis_lo);
    c.axis_hi = j.value("axis_hi", c.axis_hi);
    c.overlap_bias = j.value("overlap_bias", c.overlap_bias);
    c.transparency_lo = j.value("transparency_lo", c.transparency_lo);
    c.transparency_hi = j.value("transparency_hi", c.transparency_hi);
    c.focus_blur_lo = j.value("focus_blur_lo", c.focus_blur_lo);
    c.focus_blur_hi = j.value("focus_blur_hi", c.focus_blur_hi);
    c.background_gray = j.value("background_gray", c.background_gray);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.seed = j.value("seed", c.seed);
    return c;
}

// Image paths in a manifest are relative to the manifest file; rewrite them
// to be loadable from the current directory.
void resolve_image_paths(Manifest& m, const std::string& manifest_path, bool must_exist) {
    fs::path base = fs::path(manifest_path).parent_path();
    for (auto& img : m.images) {
        fs::path p(img.path);
        if (p.is_relative()) img.path = (base / p).string();
        if (must_exist && !fs::exists(img.path))
            throw ManifestError("missing-file", "referenced file does not exist: " + img.path);
    }
}

std::vector<std::vector<double>> features_of_dir(const std::string& path) {
    if (fs::is_regular_file(path)) return load_feature_dump(path);
    if (!fs::is_directory(path)) fail(1, "io", "not a file or directory: " + path);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(path))
        if (e.path().extension() == ".pgm") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.size() < 2) fail(1, "input", "need >= 2 .pgm images in " + path);
    std::vector<std::vector<double>> feats;
    for (const auto& f : files) feats.push_back(desk_features(load_pgm(f)));
    return feats;
}

// ---- subcommand bodies -----------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 uint64_t seed_lo, uint64_t seed_hi) {
    SimConfig cfg = config_path.empty() ? SimConfig{}
                                        : sim_config_from_json(load_json_file(config_path));
    fs::create_directories(out_dir);
    Manifest manifest;
    for (uint64_t s = seed_lo; s <= seed_hi; ++s) {
        SimScene sim = generate_scene(cfg, s);
        std::string name = "scene_" + std::to_string(s) + ".pgm";
        save_pgm(sim.image, (fs::path(out_dir) / name).string());
        sim.scene.image_path = name;  // relative to the manifest
        manifest.images.push_back(manifest_from_scene(sim.scene));
    }
    save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    std::cout << "wrote " << manifest.images.size() << " scene(s) to " << out_dir << "\n";
    return 0;
}

int cmd_pseudo_gen(const std::string& gt_path, const std::string& out_path, uint64_t seed,
                   double q, int jitter, double theta_box, double theta_p) {
    Manifest gt = load_manifest(gt_path);
    Manifest out;
    for (const auto& img : gt.images) {
        Scene scene = scene_from_manifest(img);
        OracleSegmentor seg(q, jitter, seed);
        seg.bind_scene(scene);
        PseudoLabelSet pseudo = threshold_pseudo_labels(seg.predict(), theta_box, theta_p);
        out.images.push_back(manifest_from_pseudo(img.path, pseudo));
        out.images.back().width = img.width;
        out.images.back().height = img.height;
    }
    save_manifest(out, out_path);
    return 0;
}

int cmd_plu_targets(const std::string& gt_path, const std::string& out_path, size_t K) {
    Manifest gt = load_manifest(gt_path);
    ordered_json report;
    report["version"] = kManifestVersion;
    report["images"] = ordered_json::array();
    for (const auto& img : gt.images) {
        Scene scene = scene_from_manifest(img);
        ordered_json ji;
        ji["path"] = img.path;
        ji["samples"] = ordered_json::array();
        for (const auto& s : build_judgment_training_set(scene)) {
            ordered_json js;
            js["label"] = s.label;
            js["mask_id"] = s.mask.instance_id;
            js["components"] = ordered_json::array();
            for (const auto& c : s.component_masks) js["components"].push_back(c.instance_id);
            if (s.label == 0) {
                DecompositionTarget t = build_decomposition_target(s, K);
                js["k"] = t.k;
                js["existence"] = t.existence;
            }
            ji["samples"].push_back(std::move(js));
        }
        report["images"].push_back(std::move(ji));
    }
    write_file_atomic(out_path, report.dump(2) + "\n");
    return 0;
}

int cmd_plu_apply(const std::string& pseudo_path, const std::string& gt_path,
                  const std::string& out_path, uint64_t seed, double judge_thr,
                  double exist_thr) {
    Manifest pseudo_m = load_manifest(pseudo_path);
    Manifest gt_m = load_manifest(gt_path);
    if (pseudo_m.images.size() != gt_m.images.size())
        fail(1, "mismatch", "pseudo and GT manifests have different image counts");
    Manifest out;
    for (size_t i = 0; i < pseudo_m.images.size(); ++i) {
        Scene gt = scene_from_manifest(gt_m.images[i]);
        OracleSegmentor seg(0.0, 0, seed);
        seg.bind_scene(gt);
        PseudoLabelSet set;
        set.width = pseudo_m.images[i].width;
        set.height = pseudo_m.images[i].height;
        Scene ps = scene_from_manifest(pseudo_m.images[i]);
        set.masks = ps.instances;
        set.provenance = pseudo_m.images[i].provenance;
        if (set.provenance.size() != set.masks.size())
            set.provenance.assign(set.masks.size(), MaskProvenance{});
        PseudoLabelSet corrected = apply_plu(set, seg.judgment_backend(),
                                             seg.decomposition_backend(), judge_thr, exist_thr);
        out.images.push_back(manifest_from_pseudo(pseudo_m.images[i].path, corrected));
    }
    save_manifest(out, out_path);
    return 0;
}

int cmd_contours(const std::string& manifest_path, const std::string& out_dir) {
    Manifest m = load_manifest(manifest_path);
    resolve_image_paths(m, manifest_path, /*must_exist=*/true);
    fs::create_directories(out_dir);
    std::vector<GrayImage> images;
    std::vector<Scene> scenes;
    for (const auto& img : m.images) {
        images.push_back(load_pgm(img.path));
        scenes.push_back(scene_from_manifest(img));
    }
    auto [t_T, t_F] = fit_category_thresholds(images, scenes);
    for (size_t i = 0; i < scenes.size(); ++i) {
        std::vector<int> cats;
        for (const auto& inst : scenes[i].instances)
            cats.push_back(categorize(instance_transparency(images[i], inst),
                                      instance_focus(images[i], inst), t_T, t_F));
        IndexedImage contour = render_contour_image(scenes[i], cats);
        std::string name = fs::path(m.images[i].path).stem().string() + "_contour.bmp";
        save_indexed_bmp(contour, (fs::path(out_dir) / name).string());
    }
    std::cout << "thresholds t_T=" << fmt9(t_T) << " t_F=" << fmt9(t_F) << "\n";
    return 0;
}

int cmd_augment(const std::string& manifest_path, const std::string& out_path, uint64_t seed,
                bool no_translate, bool no_rotate, bool no_scale) {
    Manifest m = load_manifest(manifest_path);
    AugmentationPolicy policy;
    policy.translate_enabled = !no_translate;
    policy.rotate_enabled = !no_rotate;
    policy.scale_enabled = !no_scale;
    Manifest out;
    for (size_t i = 0; i < m.images.size(); ++i) {
        Scene scene = scene_from_manifest(m.images[i]);
        policy.seed = seed + i;
        AugmentResult r = augment_instances(scene, policy);
        r.scene.image_path = m.images[i].path;
        out.images.push_back(manifest_from_scene(r.scene));
        for (int64_t id : r.dropped_ids)
            std::cerr << "dropped instance " << id << " in image " << m.images[i].path << "\n";
    }
    save_manifest(out, out_path);
    return 0;
}

int cmd_synth(const std::string& manifest_path, const std::string& out_dir, uint64_t seed) {
    Manifest m = load_manifest(manifest_path);
    resolve_image_paths(m, manifest_path, /*must_exist=*/true);
    fs::create_directories(out_dir);
    std::vector<GrayImage> images;
    std::vector<Scene> scenes;
    for (const auto& img : m.images) {
        images.push_back(load_pgm(img.path));
        scenes.push_back(scene_from_manifest(img));
    }
    auto [t_T, t_F] = fit_category_thresholds(images, scenes);
    GeneratorBackend gen = procedural_generator();
    for (size_t i = 0; i < scenes.size(); ++i) {
        std::vector<int> cats;
        for (size_t k = 0; k < scenes[i].instances.size(); ++k) {
            if (m.images[i].annotations[k].category) {
                cats.push_back(*m.images[i].annotations[k].category);
            } else {
                cats.push_back(categorize(
                    instance_transparency(images[i], scenes[i].instances[k]),
                    instance_focus(images[i], scenes[i].instances[k]), t_T, t_F));
            }
        }
        IndexedImage contour = render_contour_image(scenes[i], cats);
        GrayImage synth = synthesize(contour, gen, seed + i);
        std::string name = fs::path(m.images[i].path).stem().string() + "_synth.pgm";
        save_pgm(synth, (fs::path(out_dir) / name).string());
    }
    return 0;
}

int cmd_fid(const std::string& a, const std::string& b, double baseline, bool has_baseline) {
    auto fa = features_of_dir(a);
    auto fb = features_of_dir(b);
    double value = fid(fit_stats(fa), fit_stats(fb));
    std::cout << "fid " << fmt9(value) << "\n";
    if (has_baseline) std::cout << "delta_fid_pct " << fmt9(delta_fid(value, baseline)) << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& subset,
             const std::string& out_path) {
    Manifest pred_m = load_manifest(pred_path);
    Manifest gt_m = load_manifest(gt_path);
    if (pred_m.images.size() != gt_m.images.size())
        fail(1, "mismatch", "prediction and GT manifests have different image counts");
    ordered_json out;
    out["images"] = ordered_json::array();
    double sum_map = 0, sum_f1 = 0, sum_dice = 0, sum_aji = 0;
    for (size_t i = 0; i < pred_m.images.size(); ++i) {
        Scene pred = scene_from_manifest(pred_m.images[i]);
        Scene gt = scene_from_manifest(gt_m.images[i]);
        if (subset == "severe-overlap") gt = filter_severe_overlap(gt);
        std::vector<double> scores;
        for (const auto& a : pred_m.images[i].annotations) scores.push_back(a.score.value_or(1.0));
        MetricReport r = evaluate(pred, scores, gt);
        ordered_json ji;
        ji["path"] = gt_m.images[i].path;
        ji["map"] = r.map;
        ji["f1"] = r.f1;
        ji["dice"] = r.dice;
        ji["aji"] = r.aji;
        ji["ap_table"] = ordered_json::array();
        for (auto [thr, ap] : r.ap_table) ji["ap_table"].push_back({{"iou", thr}, {"ap", ap}});
        if (subset == "severe-overlap") ji["gt_instances"] = gt.instances.size();
        out["images"].push_back(std::move(ji));
        sum_map += r.map;
        sum_f1 += r.f1;
        sum_dice += r.dice;
        sum_aji += r.aji;
    }
    const double n = static_cast<double>(pred_m.images.size());
    out["mean"] = {{"map", sum_map / n}, {"f1", sum_f1 / n}, {"dice", sum_dice / n},
                   {"aji", sum_aji / n}};
    std::string text = out.dump(2) + "\n";
    if (!out_path.empty())
        write_file_atomic(out_path, text);
    else
        std::cout << text;
    return 0;
}

int cmd_loss_eval(const std::string& case_path) {
    ordered_json j = load_json_file(case_path);
    ordered_json out;
    if (j.contains("focal")) {
        const auto& f = j["focal"];
        FocalParams p{f.value("alpha", 0.25), f.value("gamma", 2.0)};
        out["focal"] = focal_loss(f.at("p_t").get<double>(), p);
    }
    if (j.contains("smooth_l1")) {
        auto t = j["smooth_l1"].at("t").get<std::array<double, 4>>();
        auto v = j["smooth_l1"].at("v").get<std::array<double, 4>>();
        out["smooth_l1"] = smooth_l1(t, v);
    }
    if (j.contains("bce")) {
        out["bce"] = binary_cross_entropy(j["bce"].at("y").get<std::vector<int>>(),
                                          j["bce"].at("p").get<std::vector<double>>());
    }
    if (j.contains("count_bce")) {
        out["count_bce"] = count_bce(j["count_bce"].at("k").get<size_t>(),
                                     j["count_bce"].at("existence").get<std::vector<double>>(),
                                     j["count_bce"].value("printed_form", false));
    }
    LossWeights w;
    if (j.contains("weights")) {
        w.alpha_ocls = j["weights"].value("alpha", 1.0);
        w.beta_count = j["weights"].value("beta", 1.0);
        w.gamma_iou = j["weights"].value("gamma", 1.0);
        w.lambda_ssl = j["weights"].value("lambda", 1.0);
    }
    if (j.contains("components")) {
        const auto& c = j["components"];
        SlComponents sc{c.value("cls", 0.0),    c.value("reg", 0.0),
                        c.value("seg", 0.0),    c.value("o_cls", 0.0),
                        c.value("i_count", 0.0), c.value("i_iou", 0.0)};
        out["total_sl"] = total_sl_loss(sc, w);
    }
    if (j.contains("sassl")) {
        const auto& s = j["sassl"];
        out["total_sassl"] = total_sassl_loss(s.at("real").get<double>(),
                                              s.at("pseudo").get<double>(),
                                              s.at("synthetic").get<double>(), w);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

std::string round_report_line(const RoundReport& r) {
    ordered_json j;
    j["iteration"] = r.iteration;
    j["lr"] = fmt9(r.lr);
    auto comp = [](const SlComponents& c) {
        return ordered_json{{"cls", fmt9(c.cls)},     {"reg", fmt9(c.reg)},
                            {"seg", fmt9(c.seg)},     {"o_cls", fmt9(c.o_cls)},
                            {"i_count", fmt9(c.i_count)}, {"i_iou", fmt9(c.i_iou)}};
    };
    j["real"] = comp(r.real);
    j["pseudo"] = comp(r.pseudo);
    j["synthetic"] = comp(r.synthetic);
    j["l_real"] = fmt9(r.l_real);
    j["l_pseudo"] = fmt9(r.l_pseudo);
    j["l_synthetic"] = fmt9(r.l_synthetic);
    j["total"] = fmt9(r.total);
    j["corrections"] = r.corrections;
    j["kept_degenerate"] = r.kept_degenerate;
    j["pseudo_masks"] = r.pseudo_mask_count;
    j["synthesized"] = r.synthesized_images;
    j["augment_dropped"] = r.augment_dropped;
    j["ema_applied"] = r.ema_applied;
    return j.dump();
}

int cmd_train_loop(const std::string& config_path, const std::string& out_path) {
    ordered_json j = load_json_file(config_path);
    uint64_t seed = j.at("seed").get<uint64_t>();
    uint64_t rounds = j.value("rounds", 20);
    size_t labeled_n = j.value("labeled_pool", 6);
    size_t unlabeled_n = j.value("unlabeled_pool", 4);
    double q = j.value("merge_probability", 0.5);
    int jitter = j.value("jitter", 0);

    RoundConfig cfg;
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        cfg.schedule.total_iterations = s.value("total_iterations", cfg.schedule.total_iterations);
        cfg.schedule.warmup_iterations = s.value("warmup_iterations", cfg.schedule.warmup_iterations);
        cfg.schedule.base_lr = s.value("base_lr", cfg.schedule.base_lr);
        cfg.schedule.ema_decay = s.value("ema_decay", cfg.schedule.ema_decay);
        cfg.schedule.ema_period = s.value("ema_period", cfg.schedule.ema_period);
        cfg.schedule.lambda_ssl = s.value("lambda_ssl", cfg.schedule.lambda_ssl);
    }
    cfg.loss_weights.lambda_ssl = cfg.schedule.lambda_ssl;
    cfg.weak_aug_enabled = j.value("weak_aug", true);
    cfg.strong_aug_enabled = j.value("strong_aug", true);
    cfg.ia_policy.seed = seed;

    SimConfig sim_cfg =
        j.contains("simulator") ? sim_config_from_json(j["simulator"]) : SimConfig{};
    std::vector<LabeledSample> labeled;
    std::vector<UnlabeledSample> unlabeled;
    for (size_t i = 0; i < labeled_n; ++i) {
        SimScene s = generate_scene(sim_cfg, seed * 1000 + i);
        labeled.push_back({std::move(s.image), std::move(s.scene)});
    }
    for (size_t i = 0; i < unlabeled_n; ++i) {
        SimScene s = generate_scene(sim_cfg, seed * 1000 + 500 + i);
        unlabeled.push_back({std::move(s.image), std::move(s.scene)});
    }

    OracleTeacher teacher(q, jitter, seed);
    ReferenceStudent student(16, seed);
    GeneratorBackend generator = procedural_generator();
    std::mt19937_64 rng(seed);

    if (!probe_teacher(teacher, unlabeled[0].image, unlabeled[0].hidden_gt))
        fail(2, "teacher-probe", "teacher emitted no proposals on the probe image");

    std::ofstream log(out_path, std::ios::app);
    if (!log) fail(1, "io", "cannot open report log: " + out_path);
    for (uint64_t it = 0; it < rounds; ++it) {
        RoundReport r;
        try {
            r = run_round(it, teacher, student, generator, labeled, unlabeled, cfg, rng);
        } catch (const std::exception& e) {
            fail(2, "round", e.what());
        }
        log << round_report_line(r) << "\n";
    }
    return 0;
}

int cmd_export_coco(const std::string& manifest_path, const std::string& out_path) {
    Manifest m = load_manifest(manifest_path);
    write_file_atomic(out_path, export_coco_json(m));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pluforge: pseudo-label unmixing and synthesis-assisted SSL toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate synthetic overlapping scenes");
    std::string sim_config, sim_out = "sim_out";
    uint64_t sim_seed = 0;
    std::string sim_seeds;
    sim->add_option("--config", sim_config, "simulator config JSON");
    sim->add_option("--out", sim_out, "output directory")->required();
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "scene seed");
    sim->add_option("--seeds", sim_seeds, "seed range a..b for a dataset directory");

    // pseudo-gen
    auto* pg = app.add_subcommand("pseudo-gen", "oracle teacher pseudo-labels from GT manifest");
    std::string pg_gt, pg_out;
    uint64_t pg_seed = 0;
    double pg_q = 0.0, pg_tb = 0.7, pg_tp = 0.5;
    int pg_jitter = 0;
    pg->add_option("--gt", pg_gt)->required();
    pg->add_option("--out", pg_out)->required();
    pg->add_option("--seed", pg_seed)->required();
    pg->add_option("--q", pg_q, "merge corruption probability");
    pg->add_option("--jitter", pg_jitter, "boundary jitter in px");
    pg->add_option("--theta-box", pg_tb);
    pg->add_option("--theta-p", pg_tp);

    // plu-targets
    auto* pt = app.add_subcommand("plu-targets", "judgment/decomposition training targets");
    std::string pt_gt, pt_out;
    size_t pt_k = 5;
    pt->add_option("--gt", pt_gt)->required();
    pt->add_option("--out", pt_out)->required();
    pt->add_option("--K", pt_k, "decomposition slot count");

    // plu-apply
    auto* pa = app.add_subcommand("plu-apply", "correct pseudo-labels with oracle backends");
    std::string pa_pseudo, pa_gt, pa_out;
    uint64_t pa_seed = 0;
    double pa_judge = 0.5, pa_exist = 0.5;
    pa->add_option("--pseudo", pa_pseudo)->required();
    pa->add_option("--gt", pa_gt)->required();
    pa->add_option("--out", pa_out)->required();
    pa->add_option("--seed", pa_seed)->required();
    pa->add_option("--judge-threshold", pa_judge);
    pa->add_option("--exist-threshold", pa_exist);

    // contours
    auto* co = app.add_subcommand("contours", "render categorized contour images");
    std::string co_manifest, co_out;
    co->add_option("--manifest", co_manifest)->required();
    co->add_option("--out", co_out)->required();

    // augment
    auto* au = app.add_subcommand("augment", "instance-level augmentation of a manifest");
    std::string au_manifest, au_out;
    uint64_t au_seed = 0;
    bool au_nt = false, au_nr = false, au_ns = false;
    au->add_option("--manifest", au_manifest)->required();
    au->add_option("--out", au_out)->required();
    au->add_option("--seed", au_seed)->required();
    au->add_flag("--no-translate", au_nt);
    au->add_flag("--no-rotate", au_nr);
    au->add_flag("--no-scale", au_ns);

    // synth
    auto* sy = app.add_subcommand("synth", "procedural contour-to-image synthesis");
    std::string sy_manifest, sy_out;
    uint64_t sy_seed = 0;
    sy->add_option("--manifest", sy_manifest)->required();
    sy->add_option("--out", sy_out)->required();
    sy->add_option("--seed", sy_seed)->required();

    // fid
    auto* fi = app.add_subcommand("fid", "FID between two image dirs or feature dumps");
    std::string fi_a, fi_b;
    double fi_baseline = 0.0;
    fi->add_option("a", fi_a)->required();
    fi->add_option("b", fi_b)->required();
    auto* fi_base_opt = fi->add_option("--baseline", fi_baseline, "print delta-FID vs baseline");

    // eval
    auto* ev = app.add_subcommand("eval", "segmentation metrics: mAP, F1, Dice, AJI");
    std::string ev_pred, ev_gt, ev_subset, ev_out;
    ev->add_option("--pred", ev_pred)->required();
    ev->add_option("--gt", ev_gt)->required();
    ev->add_option("--subset", ev_subset)->check(CLI::IsMember({"severe-overlap"}));
    ev->add_option("--out", ev_out);

    // loss-eval
    auto* le = app.add_subcommand("loss-eval", "evaluate loss components from a case file");
    std::string le_case;
    le->add_option("--case", le_case)->required();

    // train-loop
    auto* tl = app.add_subcommand("train-loop", "SA-SSL rounds with reference backends");
    std::string tl_config, tl_out;
    tl->add_option("--config", tl_config)->required();
    tl->add_option("--out", tl_out)->required();

    // export-coco
    auto* ec = app.add_subcommand("export-coco", "column-major RLE export");
    std::string ec_manifest, ec_out;
    ec->add_option("--manifest", ec_manifest)->required();
    ec->add_option("--out", ec_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "ERR:usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (sim->parsed()) {
            uint64_t lo = sim_seed, hi = sim_seed;
            if (!sim_seeds.empty()) {
                auto dots = sim_seeds.find("..");
                if (dots == std::string::npos) fail(1, "usage", "--seeds expects a..b");
                lo = std::stoull(sim_seeds.substr(0, dots));
                hi = std::stoull(sim_seeds.substr(dots + 2));
            } else if (sim_seed_opt->count() == 0) {
                fail(1, "usage", "simulate requires --seed or --seeds");
            }
            return cmd_simulate(sim_config, sim_out, lo, hi);
        }
        if (pg->parsed()) return cmd_pseudo_gen(pg_gt, pg_out, pg_seed, pg_q, pg_jitter, pg_tb, pg_tp);
        if (pt->parsed()) return cmd_plu_targets(pt_gt, pt_out, pt_k);
        if (pa->parsed()) return cmd_plu_apply(pa_pseudo, pa_gt, pa_out, pa_seed, pa_judge, pa_exist);
        if (co->parsed()) return cmd_contours(co_manifest, co_out);
        if (au->parsed()) return cmd_augment(au_manifest, au_out, au_seed, au_nt, au_nr, au_ns);
        if (sy->parsed()) return cmd_synth(sy_manifest, sy_out, sy_seed);
        if (fi->parsed()) return cmd_fid(fi_a, fi_b, fi_baseline, fi_base_opt->count() > 0);
        if (ev->parsed()) return cmd_eval(ev_pred, ev_gt, ev_subset, ev_out);
        if (le->parsed()) return cmd_loss_eval(le_case);
        if (tl->parsed()) return cmd_train_loop(tl_config, tl_out);
        if (ec->parsed()) return cmd_export_coco(ec_manifest, ec_out);
    } catch (const ManifestError& e) {
        fail(1, e.code, e.what());
    } catch (const std::invalid_argument& e) {
        fail(1, "validation", e.what());
    } catch (const std::exception& e) {
        fail(2, "pipeline", e.what());
    }
    return 0;
}
