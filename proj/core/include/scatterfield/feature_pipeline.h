// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scatterfield/math.h"
#include "scatterfield/phase.h"
#include "scatterfield/templates.h"
#include "scatterfield/volume_grid.h"

namespace scatterfield {

// Graded transmittance at pyramid level i: per level-i voxel center p,
// exp(-lambda^{i+1} * integral of rho_i from p to the light-side exit).
struct GradedTransmittanceField {
    int level = 0;
    Vec3 light_dir;  // travel direction of light
    double lambda = 0.6;
    DensityGrid values;  // level-i geometry, transmittance per voxel
};

// One 3x3x3 kernel plus one scalar per pyramid level; identity kernels
// with uniform 1/L scalars reduce the combiner to a plain mean.
struct CombinerWeights {
    std::vector<std::array<float, 27>> kernels;
    std::vector<float> scales;

    static CombinerWeights identity(int level_count);
    int level_count() const { return int(kernels.size()); }
};

struct TransmittanceFeatureVolume {
    Vec3 light_dir;
    DensityGrid values;  // level-0 geometry
    CombinerWeights weights;

    // Out-of-bounds queries transmit fully (vacuum), returning 1.
    double sample(const Vec3& p) const {
        return values.bounds().contains(p) ? values.sample_trilinear(p) : 1.0;
    }
};

// Per-template-point features for one (center, view, light) triple.
struct SampleFeatureBlock {
    Vec3 p, omega, light;
    std::vector<float> density;
    std::vector<float> transmittance;
    std::vector<float> phase;
};

struct CenterSpec {
    Vec3 p, omega, light;
};

// Precomputed per-center feature blocks for both template kinds, plus
// the phase lookup table and combiner weights that produced them.
struct FeatureTable {
    std::vector<SampleFeatureBlock> diffuse;
    std::vector<SampleFeatureBlock> highlight;
    PhaseTable phase_table;
    CombinerWeights combiner;
    double lambda = 0.6;
    double template_scale = 1.0;
};

struct FeatureConfig {
    double lambda = 0.6;        // Eq. 1 coefficient
    double step_scale = 0.5;    // march step = step_scale * level voxel size
    double template_scale = 1.0;
    int phase_g_res = 64;
    int phase_angle_res = 128;
    int phase_aperture_res = 32;
    int phase_quad_nodes = 16;
};

GradedTransmittanceField graded_transmittance(const DensityPyramid& pyramid,
                                              int level, const Vec3& light,
                                              double lambda, double step);

// 3x3x3 convolution with replicate (clamp-to-edge) padding.
DensityGrid conv3_replicate(const DensityGrid& in, const std::array<float, 27>& kernel);

// Each level is convolved, trilinearly upsampled to level-0 resolution,
// then the levels are summed with the per-level scalars.
TransmittanceFeatureVolume combine_transmittance(
    const std::vector<GradedTransmittanceField>& fields,
    const CombinerWeights& weights);

// Entry point of the light ray through p into the grid bounds (the
// point where light traveling along `light` first meets the box on
// its way to p).
Vec3 light_entry_point(const Bounds3& bounds, const Vec3& p, const Vec3& light);

// Features for one placed template: level-0 density, transmittance
// feature volume, and the Eq. 8 phase feature per template point.
// Out-of-bounds points sample density 0 and transmittance 1; the
// diffuse center point (zero offset) takes the full-sphere phase
// product, which is 1 for a normalized model.
SampleFeatureBlock sample_features(const Vec3& p, const Vec3& omega,
                                   const Vec3& light, const SamplingTemplate& tmpl,
                                   const DensityGrid& density,
                                   const TransmittanceFeatureVolume& tvol,
                                   const PhaseModel& model, const PhaseTable& table,
                                   double template_scale);

// Deterministic centers: uniform over voxels with density > 0, jittered
// within the voxel; view directions uniform on the sphere.
std::vector<CenterSpec> draw_centers(const DensityGrid& grid, int count,
                                     uint64_t seed, const Vec3& light);

// Graded transmittance at every pyramid level, combined; the march
// step at level i is step_scale * level-i voxel size.
TransmittanceFeatureVolume build_transmittance_volume(const DensityPyramid& pyramid,
                                                      const Vec3& light,
                                                      const CombinerWeights& weights,
                                                      const FeatureConfig& cfg);

// Full precompute: graded transmittance at every pyramid level,
// identity-initialized combiner, phase table, and one block per center
// per template kind. Fails if the medium has no occupied voxel.
FeatureTable precompute_tables(const DensityGrid& density,
                               const DensityPyramid& pyramid,
                               const SamplingTemplate& diffuse_tmpl,
                               const SamplingTemplate& highlight_tmpl,
                               const std::vector<CenterSpec>& centers,
                               const PhaseModel& model, const FeatureConfig& cfg);

// .vfeat container: "VFEA" header, packed f32 feature blocks, the
// phase table, and the combiner weights. Round-trips bitwise.
void save_feature_table(const FeatureTable& table, const std::string& path);
FeatureTable load_feature_table(const std::string& path);

// One block's binary wire form (positions f64, features f32); shared
// between the .vfeat and .vdata containers.
void write_feature_block(std::ostream& out, const SampleFeatureBlock& block);
SampleFeatureBlock read_feature_block(std::istream& in, uint32_t n_points);

}  // namespace scatterfield
