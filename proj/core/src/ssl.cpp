#include "pluforge/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pluforge/simulator.hpp"

namespace pluforge {

namespace {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

size_t uniform_index(std::mt19937_64& rng, size_t n) { return rng() % n; }

}  // namespace

WeightVector ema_update(const WeightVector& teacher, const WeightVector& student,
                        double decay) {
    if (teacher.values.size() != student.values.size() ||
        teacher.schema_tag != student.schema_tag)
        throw std::invalid_argument("ema_update: incompatible weight vectors");
    if (decay < 0.0 || decay > 1.0) throw std::invalid_argument("ema_update: decay out of range");
    WeightVector out;
    out.schema_tag = teacher.schema_tag;
    out.values.resize(teacher.values.size());
    for (size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = decay * teacher.values[i] + (1.0 - decay) * student.values[i];
    return out;
}

double lr_at(uint64_t iteration, const TrainingSchedule& sched) {
    if (iteration < sched.warmup_iterations)
        return sched.base_lr * static_cast<double>(iteration) /
               static_cast<double>(sched.warmup_iterations);
    const auto m80 = static_cast<uint64_t>(0.8 * static_cast<double>(sched.total_iterations));
    const auto m90 = static_cast<uint64_t>(0.9 * static_cast<double>(sched.total_iterations));
    if (iteration >= m90) return sched.base_lr * sched.decay_factor * sched.decay_factor;
    if (iteration >= m80) return sched.base_lr * sched.decay_factor;
    return sched.base_lr;
}

namespace {

std::vector<size_t> sample_indices(size_t pool, size_t quota, std::mt19937_64& rng,
                                   bool& with_replacement) {
    std::vector<size_t> out;
    if (pool == 0) throw std::invalid_argument("compose_batch: empty pool");
    if (pool < quota) {
        with_replacement = true;
        for (size_t i = 0; i < quota; ++i) out.push_back(uniform_index(rng, pool));
        return out;
    }
    // partial Fisher-Yates
    std::vector<size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i < quota; ++i) {
        size_t j = i + uniform_index(rng, pool - i);
        std::swap(idx[i], idx[j]);
        out.push_back(idx[i]);
    }
    return out;
}

}  // namespace

Batch compose_batch(size_t labeled_pool, size_t unlabeled_pool, const TrainingSchedule& sched,
                    std::mt19937_64& rng) {
    Batch b;
    b.labeled = sample_indices(labeled_pool, sched.labeled_per_batch, rng,
                               b.sampled_with_replacement);
    b.unlabeled = sample_indices(unlabeled_pool, sched.unlabeled_per_batch, rng,
                                 b.sampled_with_replacement);
    return b;
}

void hflip_scene(GrayImage& image, Scene& scene) {
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width / 2; ++x)
            std::swap(image.at(x, y), image.at(image.width - 1 - x, y));
    for (auto& m : scene.instances) {
        auto bm = m.to_bitmap();
        std::vector<uint8_t> out(bm.size());
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                out[static_cast<size_t>(y) * m.width + x] =
                    bm[static_cast<size_t>(y) * m.width + (m.width - 1 - x)];
        m = InstanceMask::from_bitmap(m.width, m.height, out, m.instance_id);
    }
}

void scale_scene(GrayImage& image, Scene& scene, double factor) {
    if (factor == 1.0) return;
    const int w = image.width, h = image.height;
    const double cx = w / 2.0, cy = h / 2.0;
    GrayImage out_img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sx = static_cast<int>(std::floor((x + 0.5 - cx) / factor + cx));
            int sy = static_cast<int>(std::floor((y + 0.5 - cy) / factor + cy));
            out_img.at(x, y) = image.at_clamped(sx, sy);
        }
    image = std::move(out_img);
    std::vector<InstanceMask> kept;
    for (auto& m : scene.instances) {
        auto bm = m.to_bitmap();
        std::vector<uint8_t> out(bm.size(), 0);
        uint64_t count = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                int sx = static_cast<int>(std::floor((x + 0.5 - cx) / factor + cx));
                int sy = static_cast<int>(std::floor((y + 0.5 - cy) / factor + cy));
                if (sx >= 0 && sx < w && sy >= 0 && sy < h &&
                    bm[static_cast<size_t>(sy) * w + sx]) {
                    out[static_cast<size_t>(y) * w + x] = 1;
                    ++count;
                }
            }
        if (count > 0)
            kept.push_back(InstanceMask::from_bitmap(w, h, out, m.instance_id));
    }
    scene.instances = std::move(kept);
    scene.severe_overlap_flags.reset();
}

void weak_augment(GrayImage& image, Scene& labels, std::mt19937_64& rng,
                  const WeakAugmentConfig& cfg) {
    if (cfg.flip_enabled && (rng() & 1)) hflip_scene(image, labels);
    if (cfg.scale_enabled) scale_scene(image, labels, uniform(rng, cfg.scale_lo, cfg.scale_hi));
}

void strong_augment(GrayImage& image, std::mt19937_64& rng, const StrongAugmentConfig& cfg) {
    auto mean_of = [&]() {
        double s = 0.0;
        for (float v : image.px) s += v;
        return image.size() ? s / static_cast<double>(image.size()) : 0.0;
    };
    if (cfg.jitter_enabled && (rng() & 1)) {
        double b = uniform(rng, 0.8, 1.2);
        double c = uniform(rng, 0.8, 1.2);
        double mean = mean_of();
        for (auto& v : image.px)
            v = static_cast<float>(std::clamp(((v - mean) * c + mean) * b, 0.0, 255.0));
    }
    if (cfg.grayscale_enabled && (rng() & 1)) {
        double mean = mean_of();
        for (auto& v : image.px)
            v = static_cast<float>(std::clamp((v - mean) * 0.5 + mean, 0.0, 255.0));
    }
    if (cfg.blur_enabled && (rng() & 1)) image = gaussian_blur(image, uniform(rng, 0.5, 2.0));
    if (cfg.cutout_enabled && (rng() & 1)) {
        double frac = uniform(rng, 0.02, 0.10);
        int cw = std::max(1, static_cast<int>(std::round(image.width * std::sqrt(frac))));
        int ch = std::max(1, static_cast<int>(std::round(image.height * std::sqrt(frac))));
        cw = std::min(cw, image.width);
        ch = std::min(ch, image.height);
        int x0 = static_cast<int>(uniform_index(rng, static_cast<size_t>(image.width - cw + 1)));
        int y0 = static_cast<int>(uniform_index(rng, static_cast<size_t>(image.height - ch + 1)));
        float fill = static_cast<float>(mean_of());
        for (int y = y0; y < y0 + ch; ++y)
            for (int x = x0; x < x0 + cw; ++x) image.at(x, y) = fill;
    }
}

// ---- reference backends ----------------------------------------------------

OracleTeacher::OracleTeacher(double merge_probability, int boundary_jitter_px, uint64_t seed,
                             size_t weight_dim)
    : q_(merge_probability), jitter_(boundary_jitter_px), seed_(seed) {
    weights_.schema_tag = "reference/1";
    std::mt19937_64 rng(splitmix64(seed ^ 0x7eac0001ull));
    for (size_t i = 0; i < weight_dim; ++i) weights_.values.push_back(uniform(rng, -1.0, 1.0));
}

ProbabilityMaskSet OracleTeacher::predict(const GrayImage& image, const Scene& context) {
    if (image.width != context.width || image.height != context.height)
        throw std::invalid_argument("OracleTeacher::predict: image/context mismatch");
    OracleSegmentor seg(q_, jitter_, splitmix64(seed_ ^ splitmix64(++calls_)));
    seg.bind_scene(context);
    return seg.predict();
}

JudgmentBackend OracleTeacher::judgment(const Scene& context) {
    OracleSegmentor seg(q_, jitter_, seed_);
    seg.bind_scene(context);
    return seg.judgment_backend();
}

DecompositionBackend OracleTeacher::decomposition(const Scene& context) {
    OracleSegmentor seg(q_, jitter_, seed_);
    seg.bind_scene(context);
    return seg.decomposition_backend();
}

ReferenceStudent::ReferenceStudent(size_t weight_dim, uint64_t seed) {
    weights_.schema_tag = "reference/1";
    std::mt19937_64 rng(splitmix64(seed ^ 0x57ad0001ull));
    for (size_t i = 0; i < weight_dim; ++i) weights_.values.push_back(uniform(rng, -1.0, 1.0));
}

SlComponents ReferenceStudent::train_step(
    const std::vector<std::pair<GrayImage, Scene>>& samples) {
    ++steps_;
    if (samples.empty()) return {};
    SlComponents acc;
    for (const auto& [image, labels] : samples) {
        const size_t npx = image.size();
        // Pseudo-prediction derived from the image alone: dark = foreground.
        std::vector<double> p_fg(npx);
        for (size_t i = 0; i < npx; ++i)
            p_fg[i] = std::clamp(1.0 - image.px[i] / 255.0, 1e-6, 1.0 - 1e-6);

        std::vector<uint8_t> target(npx, 0);
        for (const auto& m : labels.instances) {
            size_t pos = 0;
            bool fg = false;
            for (uint32_t r : m.runs) {
                if (fg) std::fill(target.begin() + pos, target.begin() + pos + r, uint8_t{1});
                pos += r;
                fg = !fg;
            }
        }

        SlComponents c;
        c.seg = seg_cross_entropy(target, p_fg);

        double mean_in = 0.0;
        uint64_t n_in = 0;
        for (size_t i = 0; i < npx; ++i)
            if (target[i]) {
                mean_in += p_fg[i];
                ++n_in;
            }
        if (n_in == 0) {
            for (double v : p_fg) mean_in += v;
            mean_in /= static_cast<double>(npx);
        } else {
            mean_in /= static_cast<double>(n_in);
        }
        c.cls = focal_loss(mean_in, FocalParams{});

        if (!labels.instances.empty()) {
            std::vector<double> per_mask_prob;
            double reg_sum = 0.0;
            for (const auto& m : labels.instances) {
                auto bm = m.to_bitmap();
                double s = 0.0;
                uint64_t n = 0;
                for (size_t i = 0; i < npx; ++i)
                    if (bm[i]) {
                        s += p_fg[i];
                        ++n;
                    }
                double q = n ? s / static_cast<double>(n) : 0.5;
                per_mask_prob.push_back(q);
                BoundingBox bb = bbox_of(m);
                std::array<double, 4> t = {bb.x / double(image.width), bb.y / double(image.height),
                                           bb.w / double(image.width), bb.h / double(image.height)};
                double shift = q - 0.5;
                std::array<double, 4> v = {t[0] + shift, t[1] + shift, t[2] + shift, t[3] + shift};
                reg_sum += smooth_l1(t, v);
            }
            c.reg = reg_sum / static_cast<double>(labels.instances.size());
            c.o_cls = binary_cross_entropy(std::vector<int>(per_mask_prob.size(), 1),
                                           per_mask_prob);
            size_t k = std::min<size_t>(per_mask_prob.size(), 5);
            std::vector<double> exist(per_mask_prob.begin(),
                                      per_mask_prob.begin() +
                                          std::min<size_t>(per_mask_prob.size(), 5));
            exist.resize(5, 0.5);
            c.i_count = count_bce(k, exist);

            std::vector<uint8_t> pred_bm(npx, 0);
            uint64_t pred_n = 0;
            for (size_t i = 0; i < npx; ++i)
                if (p_fg[i] >= 0.5) {
                    pred_bm[i] = 1;
                    ++pred_n;
                }
            if (pred_n > 0) {
                InstanceMask pred = InstanceMask::from_bitmap(image.width, image.height,
                                                              pred_bm, 1);
                InstanceMask gt_union = InstanceMask::from_bitmap(image.width, image.height,
                                                                  target, 1);
                c.i_iou = 1.0 - mask_iou(pred, gt_union);
            } else {
                c.i_iou = 1.0;
            }
        }
        acc.cls += c.cls;
        acc.reg += c.reg;
        acc.seg += c.seg;
        acc.o_cls += c.o_cls;
        acc.i_count += c.i_count;
        acc.i_iou += c.i_iou;
    }
    const double n = static_cast<double>(samples.size());
    acc.cls /= n;
    acc.reg /= n;
    acc.seg /= n;
    acc.o_cls /= n;
    acc.i_count /= n;
    acc.i_iou /= n;
    return acc;
}

// ---- training round --------------------------------------------------------

bool probe_teacher(TeacherBackend& teacher, const GrayImage& image, const Scene& context) {
    return !teacher.predict(image, context).proposals.empty();
}

RoundReport run_round(uint64_t iteration, TeacherBackend& teacher, StudentBackend& student,
                      const GeneratorBackend& generator,
                      const std::vector<LabeledSample>& labeled_pool,
                      const std::vector<UnlabeledSample>& unlabeled_pool,
                      const RoundConfig& cfg, std::mt19937_64& rng) {
    RoundReport report;
    report.iteration = iteration;
    report.lr = lr_at(iteration, cfg.schedule);

    Batch batch = compose_batch(labeled_pool.size(), unlabeled_pool.size(), cfg.schedule, rng);

    std::vector<std::pair<GrayImage, Scene>> real_stream, pseudo_stream, synth_stream;
    for (size_t idx : batch.labeled)
        real_stream.emplace_back(labeled_pool[idx].image, labeled_pool[idx].gt);

    // Category thresholds come from the labeled batch.
    std::vector<GrayImage> lab_images;
    std::vector<Scene> lab_scenes;
    for (size_t idx : batch.labeled) {
        lab_images.push_back(labeled_pool[idx].image);
        lab_scenes.push_back(labeled_pool[idx].gt);
    }
    auto [t_T, t_F] = fit_category_thresholds(lab_images, lab_scenes);

    for (size_t idx : batch.unlabeled) {
        GrayImage image = unlabeled_pool[idx].image;
        Scene context = unlabeled_pool[idx].hidden_gt;
        if (cfg.weak_aug_enabled) weak_augment(image, context, rng, cfg.weak_cfg);

        ProbabilityMaskSet raw;
        try {
            raw = teacher.predict(image, context);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("run_round[predict]: ") + e.what());
        }
        PseudoLabelSet pseudo = threshold_pseudo_labels(raw, cfg.theta_box, cfg.theta_p);
        PseudoLabelSet corrected;
        try {
            corrected = apply_plu(pseudo, teacher.judgment(context),
                                  teacher.decomposition(context), cfg.judge_threshold,
                                  cfg.exist_threshold);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("run_round[plu]: ") + e.what());
        }
        for (const auto& entry : corrected.correction_log) {
            if (entry.reason == "decomposed")
                ++report.corrections;
            else
                ++report.kept_degenerate;
        }
        report.pseudo_mask_count += corrected.masks.size();

        Scene pseudo_scene;
        pseudo_scene.width = corrected.width;
        pseudo_scene.height = corrected.height;
        pseudo_scene.instances = corrected.masks;
        pseudo_stream.emplace_back(image, pseudo_scene);

        if (pseudo_scene.instances.empty()) continue;

        std::vector<int> categories;
        for (const auto& m : pseudo_scene.instances)
            categories.push_back(categorize(instance_transparency(image, m),
                                            instance_focus(image, m), t_T, t_F));

        AugmentationPolicy policy = cfg.ia_policy;
        policy.seed = splitmix64(policy.seed ^ splitmix64(iteration * 1315423911ull + idx));
        AugmentResult aug = augment_instances(pseudo_scene, policy);
        report.augment_dropped += aug.dropped_ids.size();
        if (aug.scene.instances.empty()) continue;

        // Categories follow instance ids through augmentation.
        std::vector<int> aug_categories;
        for (const auto& m : aug.scene.instances) {
            size_t src = 0;
            for (size_t i = 0; i < pseudo_scene.instances.size(); ++i)
                if (pseudo_scene.instances[i].instance_id == m.instance_id) src = i;
            aug_categories.push_back(categories[src]);
        }
        IndexedImage contour = render_contour_image(aug.scene, aug_categories);
        GrayImage synth;
        try {
            synth = synthesize(contour, generator, policy.seed);
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("run_round[synthesize]: ") + e.what());
        }
        ++report.synthesized_images;
        synth_stream.emplace_back(std::move(synth), aug.scene);
    }

    if (cfg.strong_aug_enabled) {
        for (auto* stream : {&real_stream, &pseudo_stream, &synth_stream})
            for (auto& [image, labels] : *stream) strong_augment(image, rng, cfg.strong_cfg);
    }

    try {
        report.real = student.train_step(real_stream);
        report.pseudo = student.train_step(pseudo_stream);
        report.synthetic = student.train_step(synth_stream);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("run_round[train_step]: ") + e.what());
    }
    report.l_real = total_sl_loss(report.real, cfg.loss_weights);
    report.l_pseudo = total_sl_loss(report.pseudo, cfg.loss_weights);
    report.l_synthetic = total_sl_loss(report.synthetic, cfg.loss_weights);
    report.total = total_sassl_loss(report.l_real, report.l_pseudo, report.l_synthetic,
                                    cfg.loss_weights);

    if (cfg.schedule.ema_period > 0 && iteration % cfg.schedule.ema_period == 0) {
        teacher.set_weights(
            ema_update(teacher.weights(), student.weights(), cfg.schedule.ema_decay));
        report.ema_applied = true;
    }
    return report;
}

}  // namespace pluforge
