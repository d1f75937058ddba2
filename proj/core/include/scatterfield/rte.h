// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scatterfield/camera.h"
#include "scatterfield/feature_pipeline.h"
#include "scatterfield/image.h"
#include "scatterfield/math.h"
#include "scatterfield/phase.h"
#include "scatterfield/volume_grid.h"

namespace scatterfield {

// A density field bound to its optical properties and phase function.
struct Medium {
    DensityGrid grid;
    MediumProperties props;
    PhaseModel phase;

    double max_density() const;
    // The Monte Carlo estimators require a gray extinction scale (a
    // chromatic scale would need spectral tracking, which is out of
    // scope); albedo may still differ per channel.
    double gray_sigma_t() const;
};

// Source at infinity: radiance I arrives traveling along `direction`.
struct DistantLight {
    Vec3 direction;  // unit travel direction of the light
    Vec3 intensity;  // per-channel radiance scale, >= 0

    void validate() const;
};

// One oracle-computed in-scatter value with its Monte Carlo error.
struct ScatterLabel {
    Vec3 F;        // in-scatter F(p, omega), per channel
    Vec3 p;
    Vec3 omega;    // view travel direction at p
    int spp = 0;
    Vec3 stderr_;  // per-channel standard error of the mean
};

// Scattering orders F_0..F_k and the eta-weighted partial sum.
struct NeumannTerms {
    std::vector<Vec3> terms;        // F_i estimates
    std::vector<Vec3> term_stderr;  // per-order standard errors
    Vec3 albedo;                    // eta used for the weighting

    // sum over i <= upto of eta^i * F_i (all terms when upto < 0).
    Vec3 partial_sum(int upto = -1) const;
    Vec3 partial_sum_stderr;  // stderr of the full eta-weighted sum
};

struct DatasetEntry {
    SampleFeatureBlock diffuse;
    SampleFeatureBlock highlight;
    ScatterLabel label;
    bool high_variance = false;  // stderr exceeded the configured ceiling
};

struct DatasetZ {
    std::vector<DatasetEntry> entries;
    nlohmann::json manifest;
};

// Per-channel transmittance exp(-mu_t * integral of rho) over p -> q.
Vec3 transmittance(const Medium& medium, const Vec3& p, const Vec3& q, double step);

// Single scatter F_0(p, omega) = f_p(angle(-l, omega)) * T(p, entry) * I,
// the base case of the Neumann expansion.
Vec3 single_scatter(const Medium& medium, const DistantLight& light, const Vec3& p,
                    const Vec3& omega, double step);

// Field interface for the transport operator: F(position, view dir).
using ScatterField = std::function<Vec3(const Vec3&, const Vec3&)>;

// One application of the transport operator Pi to a field:
// (Pi F)(p, omega) = int_sphere f_p int_path T mu_t F. Unbiased MC with
// uniform direction sampling and transmittance-weighted distances;
// stderr_out (optional) receives the per-channel standard error.
Vec3 neumann_apply(const Medium& medium, const DistantLight& light,
                   const ScatterField& F_prev, const Vec3& p, const Vec3& omega,
                   int samples, uint64_t seed, double step, Vec3* stderr_out = nullptr);

struct NeumannOptions {
    int order = 12;        // highest term k
    int samples = 10000;   // independent walks
    uint64_t seed = 1;
    double step_scale = 0.5;     // light-march step = step_scale * voxel
    bool co_directional = false; // Eq. 20 mode: constant phase factored out
};

// All orders from shared prefix-weighted walks: one k-step walk yields
// every F_0..F_k (escape truncates the remaining orders to zero).
NeumannTerms neumann_series(const Medium& medium, const DistantLight& light,
                            const Vec3& p, const Vec3& omega,
                            const NeumannOptions& opts);

struct PathTraceOptions {
    int max_depth = 64;
    int rr_start_depth = 16;  // Russian roulette beyond this depth
    double step_scale = 0.5;
};

// Full in-scatter estimate by volumetric path tracing: transmittance-
// weighted (delta-tracking) distance sampling, uniform sphere direction
// sampling weighted by the phase function, and next-event estimation
// to the distant light at every vertex. Deterministic per seed.
ScatterLabel path_trace_inscatter(const Medium& medium, const DistantLight& light,
                                  const Vec3& p, const Vec3& omega, int spp,
                                  uint64_t seed,
                                  const PathTraceOptions& opts = {});

struct DatasetOptions {
    int spp = 1024;
    uint64_t seed = 1;
    double stderr_ceiling = 0.1;  // relative; above it entries are flagged
    PathTraceOptions trace;
};

// Pairs each feature block with a path-traced label at its center.
DatasetZ generate_dataset(const Medium& medium, const DistantLight& light,
                          const FeatureTable& features,
                          const std::vector<CenterSpec>& centers,
                          const DatasetOptions& opts);

// .vdata container: "VDAT" magic, JSON manifest, packed payload.
void save_dataset(const DatasetZ& dataset, const std::string& path);
DatasetZ load_dataset(const std::string& path);

// In-scatter provider for the shared ray marcher: maps (position, view
// travel direction, pixel index) to F; the pixel index seeds any
// internal estimator so parallel schedules cannot change results.
using InscatterProvider = std::function<Vec3(const Vec3&, const Vec3&, uint32_t)>;

struct RenderOptions {
    double step_scale = 0.5;  // march step = step_scale * voxel size
    Vec3 background{0.0, 0.0, 0.0};
};

// L_o = T * L_bg + sum over march steps of T * mu_s * F * dt, shared by
// the reference, single-scatter, and neural render paths so that image
// differences isolate the in-scatter estimator.
ImageF render_volume(const Medium& medium, const Camera& camera,
                     const InscatterProvider& provider, const RenderOptions& opts);

// Reference render: per-step F from path_trace_inscatter at the given
// samples per step.
ImageF render_reference(const Medium& medium, const DistantLight& light,
                        const Camera& camera, int spp, uint64_t seed,
                        const RenderOptions& opts = {});

// Baseline render: per-step F = F_0 only.
ImageF render_single_scatter(const Medium& medium, const DistantLight& light,
                             const Camera& camera, const RenderOptions& opts = {});

}  // namespace scatterfield
