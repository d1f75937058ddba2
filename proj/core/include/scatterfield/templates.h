// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scatterfield/math.h"

namespace scatterfield {

enum class TemplateKind { Diffuse, Highlight };

// One shell (diffuse) or one quarter-segment frustum (highlight) of
// probe points, in template-local coordinates.
struct TemplateLayer {
    int index = 0;
    double radius = 0.0;       // outer shell radius / far axial bound
    double cap_radius = 0.0;   // half the layer's achieved point spacing D
    std::vector<Vec3> points;
};

struct SamplingTemplate {
    TemplateKind kind = TemplateKind::Diffuse;
    uint64_t seed = 0;
    std::vector<TemplateLayer> layers;
    // Highlight only: generation-time segment length and lateral cone.
    double gen_distance = 0.0;
    double cone_half_angle = 0.0;

    int total_points() const;
};

// Default per-layer point counts.
std::vector<int> diffuse_default_counts();    // [6,8,12,16,24,32,48,48]
std::vector<int> highlight_default_counts();  // [32,16,16,8]

// Uniformity metric D: the mean over points of the distance to each
// point's nearest neighbor. Requires at least 2 points.
double uniformity_metric(const std::vector<Vec3>& points);

// Radius law r_i = (2^{i-1} / (2^8 * D_unit)) * xi_i with
// xi_i = 1 - 0.08 * min(i, 5), for layer index i >= 1.
double layer_radius(int i, double D_unit);

// Diffuse template: 8 concentric shells of blue-noise points. Layer 0
// holds one center point plus interior points within r_0 = r_1 / 2;
// layer i >= 1 fills the shell (r_{i-1}, r_i]. Radii follow the radius
// law, with each layer's D measured from a unit-radius calibration run
// of the same generator. Deterministic per seed.
SamplingTemplate generate_diffuse_template(const std::vector<int>& counts,
                                           uint64_t seed);

// Highlight template: the segment from the light's medium entry point
// to p, split into 4 equal-length layers (nearest entry first), each
// filled with blue-noise points inside the cone frustum of the given
// half-angle with apex at the entry point. Deterministic per seed.
SamplingTemplate generate_highlight_template(const std::vector<int>& counts,
                                             double entry_to_p_distance,
                                             double cone_half_angle, uint64_t seed);

// World-space sample positions. Diffuse templates translate to p and
// scale by template_scale (orientation-free). Highlight templates
// rotate local +z onto p - entry, scale to span the actual segment,
// and anchor at entry; the lateral frame derives from omega so that
// rotating all inputs rotates the placed points identically.
std::vector<Vec3> place_template(const SamplingTemplate& tmpl, const Vec3& p,
                                 const Vec3& omega, const Vec3& light,
                                 const Vec3& entry, double template_scale = 1.0);

// Per-point world-space cap radii (the layer cap_radius under the same
// scaling as place_template), in point order.
std::vector<double> placed_cap_radii(const SamplingTemplate& tmpl, const Vec3& p,
                                     const Vec3& entry, double template_scale = 1.0);

// .vtmpl JSON serialization; round-trips exactly.
void save_template(const SamplingTemplate& tmpl, const std::string& path);
SamplingTemplate load_template(const std::string& path);

}  // namespace scatterfield
