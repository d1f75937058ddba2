// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: grid sampling, transmittance
// marching, phase evaluation and table lookup, template generation,
// feature extraction, label tracing, and the backbone forward pass.

#include <benchmark/benchmark.h>

#include <cmath>

#include "scatterfield/feature_pipeline.h"
#include "scatterfield/phase.h"
#include "scatterfield/predictor.h"
#include "scatterfield/rng.h"
#include "scatterfield/rte.h"
#include "scatterfield/scene_gen.h"
#include "scatterfield/templates.h"
#include "scatterfield/volume_grid.h"

namespace sf = scatterfield;

namespace {

const sf::DensityGrid& cloud64() {
    static sf::DensityGrid g = sf::generate_medium(sf::MediumKind::ProceduralCloud, 64, 3);
    return g;
}

sf::Medium study_medium(int dims) {
    sf::Medium m;
    m.grid = sf::generate_medium(sf::MediumKind::ProceduralCloud, dims, 3);
    m.props.sigma_t_scale = {8.0, 8.0, 8.0};
    m.props.albedo = {0.9, 0.85, 0.8};
    m.props.material_class = sf::MaterialClass::SolidLiquid;
    m.phase = sf::PhaseModel::for_material(sf::MaterialClass::SolidLiquid, {0.6, -0.2});
    return m;
}

void BM_TrilinearSample(benchmark::State& state) {
    const sf::DensityGrid& g = cloud64();
    sf::Pcg32 rng(1, 2);
    double acc = 0.0;
    for (auto _ : state) {
        sf::Vec3 p{rng.next_double() * 2 - 1, rng.next_double() * 2 - 1,
                   rng.next_double() * 2 - 1};
        acc += g.sample_trilinear(p);
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_TrilinearSample);

void BM_TransmittanceMarch(benchmark::State& state) {
    sf::Medium m = study_medium(64);
    double step = 0.5 * m.grid.voxel_size();
    sf::Pcg32 rng(3, 4);
    sf::Vec3 acc{};
    for (auto _ : state) {
        sf::Vec3 p{rng.next_double() * 2 - 1, rng.next_double() * 2 - 1,
                   rng.next_double() * 2 - 1};
        sf::Vec3 q{rng.next_double() * 2 - 1, rng.next_double() * 2 - 1,
                   rng.next_double() * 2 - 1};
        acc = acc + sf::transmittance(m, p, q, step);
    }
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_TransmittanceMarch);

void BM_PhaseEvalMultiLobe(benchmark::State& state) {
    sf::PhaseModel m = sf::PhaseModel::for_material(sf::MaterialClass::Skin,
                                                    {0.8, 0.3, -0.4});
    sf::Pcg32 rng(5, 6);
    double acc = 0.0;
    for (auto _ : state) acc += sf::eval_phase(m, rng.next_double() * 2 - 1);
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PhaseEvalMultiLobe);

void BM_PhaseTableLookup(benchmark::State& state) {
    static sf::PhaseTable table(33, 65, 17, 16);
    sf::Pcg32 rng(7, 8);
    double acc = 0.0;
    for (auto _ : state)
        acc += table.lookup_hg(-0.9 + 1.8 * rng.next_double(),
                               sf::kPi * rng.next_double(),
                               0.05 + 3.0 * rng.next_double());
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PhaseTableLookup);

void BM_DiffuseTemplateGen(benchmark::State& state) {
    uint64_t seed = 0;
    for (auto _ : state) {
        sf::SamplingTemplate t =
            sf::generate_diffuse_template(sf::diffuse_default_counts(), seed++);
        benchmark::DoNotOptimize(t.layers.back().points.back().x);
    }
}
BENCHMARK(BM_DiffuseTemplateGen)->Unit(benchmark::kMillisecond);

void BM_SampleFeatures(benchmark::State& state) {
    static sf::Medium m = study_medium(32);
    static sf::DensityPyramid pyr(m.grid);
    static sf::SamplingTemplate dt =
        sf::generate_diffuse_template(sf::diffuse_default_counts(), 7);
    static sf::TransmittanceFeatureVolume tvol = sf::build_transmittance_volume(
        pyr, sf::normalize(sf::Vec3{0.2, -1.0, 0.1}),
        sf::CombinerWeights::identity(pyr.level_count()), sf::FeatureConfig{});
    static sf::PhaseTable table(17, 33, 9, 8);
    sf::Vec3 p{0.1, 0.0, -0.1};
    sf::Vec3 omega = sf::normalize(sf::Vec3{0.3, 0.1, 1.0});
    sf::Vec3 light = sf::normalize(sf::Vec3{0.2, -1.0, 0.1});
    for (auto _ : state) {
        sf::SampleFeatureBlock b =
            sf::sample_features(p, omega, light, dt, m.grid, tvol, m.phase, table, 1.0);
        benchmark::DoNotOptimize(b.density.back());
    }
}
BENCHMARK(BM_SampleFeatures)->Unit(benchmark::kMicrosecond);

void BM_PathTraceSample(benchmark::State& state) {
    static sf::Medium m = study_medium(32);
    sf::DistantLight light{sf::normalize(sf::Vec3{0.2, -1.0, 0.1}), {1, 1, 1}};
    sf::Vec3 p{0.1, 0.0, -0.1};
    sf::Vec3 omega = sf::normalize(sf::Vec3{0.3, 0.1, 1.0});
    uint64_t seed = 0;
    for (auto _ : state) {
        sf::ScatterLabel l = sf::path_trace_inscatter(m, light, p, omega, 16, seed++);
        benchmark::DoNotOptimize(l.F.x);
    }
}
BENCHMARK(BM_PathTraceSample)->Unit(benchmark::kMicrosecond);

void BM_BackboneForward(benchmark::State& state) {
    sf::BackboneConfig cfg;
    cfg.seed = 9;
    static sf::Backbone<float> net = sf::make_backbone<float>(cfg);
    sf::SampleFeatureBlock d, h;
    sf::Pcg32 rng(11, 12);
    for (int i = 0; i < 194; ++i) {
        d.density.push_back(float(rng.next_double()));
        d.transmittance.push_back(float(rng.next_double()));
        d.phase.push_back(float(rng.next_double()));
    }
    for (int i = 0; i < 72; ++i) {
        h.density.push_back(float(rng.next_double()));
        h.transmittance.push_back(float(rng.next_double()));
        h.phase.push_back(float(rng.next_double()));
    }
    sf::ConfigParams params;
    params.g_params = {0.6, -0.2};
    params.albedo = {0.9, 0.85, 0.8};
    params.alpha = 1.2;
    for (auto _ : state) {
        sf::Tape<float> tape;
        sf::BoundBackbone<float> bound = sf::bind_backbone(tape, net);
        int y = sf::backbone_forward(bound, d, h, params);
        benchmark::DoNotOptimize(tape.value(y)[0]);
    }
}
BENCHMARK(BM_BackboneForward)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
