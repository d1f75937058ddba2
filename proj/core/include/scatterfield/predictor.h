// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scatterfield/feature_pipeline.h"
#include "scatterfield/neural.h"
#include "scatterfield/rte.h"

namespace scatterfield {

// Conditioning parameters injected at layer 0 of every stack: the
// phase asymmetry values (one per lobe, count fixed by material
// class), the albedo, and the view/light angle alpha.
struct ConfigParams {
    std::vector<double> g_params;
    Vec3 albedo{0.5, 0.5, 0.5};
    double alpha = 0.0;  // angle(omega, l), radians

    void validate(MaterialClass cls) const;
};

// Derives the conditioning vector for one center from the medium's
// optical properties and the view/light geometry.
ConfigParams make_config(const MediumProperties& props, const PhaseModel& phase,
                         const Vec3& omega, const Vec3& light_dir);

struct BackboneConfig {
    std::vector<int> diffuse_counts = diffuse_default_counts();
    std::vector<int> highlight_counts = highlight_default_counts();
    int width = 32;        // FC-1 / FC-2 state width
    int merge_width = 64;  // per-type and cross-feature merges
    int head_width = 64;   // head is head_width -> head_width -> 3
    double gamma = 4.0;    // log-compression exponent
    uint64_t seed = 1;     // parameter init
    // Squeeze-excite as printed (no learnable weights) instead of the
    // 8 -> 4 -> 3 bottleneck.
    bool literal_attention = false;

    std::string to_json() const;  // canonical form, digested into .vnet
    static BackboneConfig from_json(const std::string& json_text);
};

// Six stacks ({density, phase, transmittance} x {diffuse, highlight})
// sharing structure but never parameters, the per-type and cross-type
// merges, and the three-layer head.
template <typename T>
struct Backbone {
    BackboneConfig config;
    ParamStore<T> params;
};

template <typename T>
Backbone<T> make_backbone(const BackboneConfig& config);

// Parameters pushed once onto a tape; every forward on that tape
// shares the leaves, so one backward accumulates the batch gradient.
template <typename T>
struct BoundBackbone {
    const Backbone<T>* net = nullptr;
    Tape<T>* tape = nullptr;
    std::vector<int> leaves;  // tape node per parameter, store order
};

template <typename T>
BoundBackbone<T> bind_backbone(Tape<T>& tape, const Backbone<T>& net);

// Adds the tape's leaf gradients into the store's gradient buffers.
template <typename T>
void accumulate_grads(const BoundBackbone<T>& bound, Backbone<T>& net);

// Fusion-block executions per feature type, for the 8 + 4 structure
// check (indexed density, phase, transmittance).
struct ForwardCounts {
    std::array<int, 3> diffuse{};
    std::array<int, 3> highlight{};
};

// Full forward pass to the y node (3 channels, nonnegative by the
// output activation). Raw per-layer values enter sorted descending so
// the network sees order statistics; permuting points within a layer
// cannot change the output.
template <typename T>
int backbone_forward(const BoundBackbone<T>& bound, const SampleFeatureBlock& diffuse,
                     const SampleFeatureBlock& highlight, const ConfigParams& cfg,
                     ForwardCounts* counts = nullptr);

// Convenience single-input inference on a scratch tape.
Vec3 predict_y(const Backbone<float>& net, const SampleFeatureBlock& diffuse,
               const SampleFeatureBlock& highlight, const ConfigParams& cfg);

// y = log(F / eta^gamma + 1) and its inverse F = eta^gamma (e^y - 1).
Vec3 encode_label(const Vec3& F, const Vec3& albedo, double gamma);
Vec3 decode_prediction(const Vec3& y, const Vec3& albedo, double gamma);

// Mean over channels of the squared log-space difference (Eq. 21 for
// one sample; batch losses average these).
double loss_ls(const Vec3& pred_F, const Vec3& label_F, const Vec3& albedo,
               double gamma);

struct TrainOptions {
    int steps = 2000;
    int batch = 64;
    AdamConfig adam;  // lr 1e-3 default
    uint64_t seed = 1;
    int val_every = 100;        // validation cadence in steps
    std::string loss_csv_path;  // written when non-empty
};

struct TrainCurvePoint {
    int step = 0;
    double train_loss = 0.0;  // batch loss at this step
    double val_loss = 0.0;    // most recent validation loss
};

struct TrainResult {
    std::vector<TrainCurvePoint> curve;
    double initial_train_loss = 0.0;  // full train split before step 1
    double final_train_loss = 0.0;    // full train split after training
    double final_val_loss = 0.0;
    size_t train_count = 0;
    size_t val_count = 0;
};

// Minimizes the mean y-space loss with adaptive moments. Deterministic
// per seed; the validation split holds out entries whose index hash
// lands in the 10% bucket. Aborts with diagnostics on non-finite loss.
TrainResult train_backbone(Backbone<float>& net, const DatasetZ& dataset,
                           const MediumProperties& props, const PhaseModel& phase,
                           const TrainOptions& opts);

// Batched forward + decode over every center in the table.
std::vector<Vec3> predict_field(const Backbone<float>& net, const FeatureTable& table,
                                const MediumProperties& props, const PhaseModel& phase);

// Neural render: the predictor is evaluated once per occupied voxel
// (view direction toward that voxel from the camera), the resulting
// field is trilinearly interpolated by the same marcher the reference
// render uses, so image differences isolate the in-scatter estimate.
ImageF render_neural(const Medium& medium, const DistantLight& light,
                     const Camera& camera, const Backbone<float>& net,
                     const FeatureTable& table, const SamplingTemplate& diffuse_tmpl,
                     const SamplingTemplate& highlight_tmpl, const FeatureConfig& fcfg,
                     const RenderOptions& ropts = {});

// Label-injection harness: identical bake-and-interpolate path, but
// with path-traced labels in place of network predictions; bounds the
// error attributable to the sparse-prediction cache itself.
ImageF render_injected(const Medium& medium, const DistantLight& light,
                       const Camera& camera, int spp, uint64_t seed,
                       const RenderOptions& ropts = {});

// .vnet round-trip for a backbone (config JSON + parameter blocks).
void save_backbone(const Backbone<float>& net, const std::string& path);
Backbone<float> load_backbone(const std::string& path);

}  // namespace scatterfield
