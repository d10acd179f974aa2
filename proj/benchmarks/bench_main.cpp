#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pluforge/eval.hpp"
#include "pluforge/fid.hpp"
#include "pluforge/losses.hpp"
#include "pluforge/masks.hpp"
#include "pluforge/simulator.hpp"
#include "pluforge/synthesis.hpp"

namespace {

using namespace pluforge;

SimScene make_scene(int size, int n_lo, int n_hi, uint64_t seed) {
    SimConfig cfg;
    cfg.width = cfg.height = size;
    cfg.n_instances_lo = n_lo;
    cfg.n_instances_hi = n_hi;
    cfg.overlap_bias = 0.9;
    if (size >= 512) {
        cfg.axis_lo = 16.0;
        cfg.axis_hi = 48.0;
    }
    return generate_scene(cfg, seed);
}

void BM_RenderContourImage(benchmark::State& state) {
    auto sim = make_scene(static_cast<int>(state.range(0)), 8, 12, 80001);
    std::vector<int> cats(sim.scene.instances.size(), 1);
    for (auto _ : state) {
        auto img = render_contour_image(sim.scene, cats);
        benchmark::DoNotOptimize(img.px.data());
    }
}
BENCHMARK(BM_RenderContourImage)->Arg(128)->Arg(512);

void BM_LayeredMaskRasters(benchmark::State& state) {
    auto sim = make_scene(static_cast<int>(state.range(0)), 8, 12, 80001);
    for (auto _ : state) {
        auto layers = layered_mask_rasters(sim.scene);
        benchmark::DoNotOptimize(layers.data());
    }
}
BENCHMARK(BM_LayeredMaskRasters)->Arg(128)->Arg(512);

void BM_ExtractContour(benchmark::State& state) {
    auto sim = make_scene(512, 8, 12, 80001);
    for (auto _ : state)
        for (const auto& m : sim.scene.instances) {
            auto chains = extract_contour(m);
            benchmark::DoNotOptimize(chains.data());
        }
}
BENCHMARK(BM_ExtractContour);

void BM_HungarianMatch(benchmark::State& state) {
    const auto n = static_cast<size_t>(state.range(0));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(0.0, 10.0);
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (auto& row : cost)
        for (auto& c : row) c = d(rng);
    for (auto _ : state) {
        auto a = hungarian_match(cost);
        benchmark::DoNotOptimize(a);
    }
}
BENCHMARK(BM_HungarianMatch)->Arg(8)->Arg(16)->Arg(32);

void BM_DeskFeaturesAndFid(benchmark::State& state) {
    std::vector<GrayImage> imgs;
    for (int i = 0; i < 8; ++i) imgs.push_back(make_scene(128, 6, 10, 90000 + i).image);
    for (auto _ : state) {
        std::vector<std::vector<double>> fa, fb;
        for (int i = 0; i < 4; ++i) fa.push_back(desk_features(imgs[i]));
        for (int i = 4; i < 8; ++i) fb.push_back(desk_features(imgs[i]));
        double v = fid(fit_stats(fa), fit_stats(fb));
        benchmark::DoNotOptimize(v);
    }
}
BENCHMARK(BM_DeskFeaturesAndFid);

void BM_Evaluate(benchmark::State& state) {
    auto sim = make_scene(256, 8, 12, 90100);
    std::vector<double> scores(sim.scene.instances.size(), 0.9);
    for (auto _ : state) {
        auto r = evaluate(sim.scene, scores, sim.scene);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_Evaluate);

void BM_GenerateScene(benchmark::State& state) {
    uint64_t seed = 0;
    for (auto _ : state) {
        auto sim = make_scene(static_cast<int>(state.range(0)), 6, 10, seed++);
        benchmark::DoNotOptimize(sim.image.px.data());
    }
}
BENCHMARK(BM_GenerateScene)->Arg(128)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
