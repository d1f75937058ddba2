// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/predictor.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "scatterfield/error.h"
#include "scatterfield/parallel.h"
#include "scatterfield/rng.h"

namespace scatterfield {

namespace {

constexpr int kCfgDim = 7;  // g (3, zero-padded), albedo (3), alpha
constexpr int kAttentionIn = 8;
constexpr int kAttentionHidden = 4;
constexpr int kFeatureTypes = 3;

const char* kTauNames[kFeatureTypes] = {"density", "phase", "trans"};

int expected_g_count(MaterialClass cls) {
    switch (cls) {
        case MaterialClass::Air: return 1;
        case MaterialClass::Gas: return 1;
        case MaterialClass::SolidLiquid: return 2;
        case MaterialClass::Skin: return 3;
    }
    return 1;
}

// Tape node ids for one stack / the whole net, laid out in the same
// order make_backbone creates the parameters. collect_ids walks that
// order arithmetically, so it must mirror walk_params exactly.
struct BlockIds {
    int att_W1 = -1, att_b1 = -1, att_W2 = -1, att_b2 = -1;
    int fc1_W = -1, fc1_b = -1;
    int fc2_W = -1, fc2_b = -1;
};
struct StackIds {
    int init_W = -1, init_b = -1;
    std::vector<BlockIds> blocks;
};
struct NetIds {
    StackIds stacks[2][kFeatureTypes];  // [kind][tau]
    int merge_W[kFeatureTypes] = {-1, -1, -1};
    int merge_b[kFeatureTypes] = {-1, -1, -1};
    int cross_W = -1, cross_b = -1;
    int head_W[3] = {-1, -1, -1};
    int head_b[3] = {-1, -1, -1};
};

// Enumerates every parameter in canonical order. fn(name, shape,
// fan_in) with fan_in 0 for zero-initialized biases.
template <typename F>
void walk_params(const BackboneConfig& cfg, F&& fn) {
    const std::vector<int>* counts[2] = {&cfg.diffuse_counts, &cfg.highlight_counts};
    const char* kind_names[2] = {"d", "h"};
    int W = cfg.width;
    for (int k = 0; k < 2; ++k) {
        for (int t = 0; t < kFeatureTypes; ++t) {
            std::string base = std::string(kind_names[k]) + "/" + kTauNames[t];
            fn(base + "/init/W", std::vector<int>{W, kCfgDim}, kCfgDim);
            fn(base + "/init/b", std::vector<int>{W}, 0);
            for (size_t i = 0; i < counts[k]->size(); ++i) {
                std::string blk = base + "/blk" + std::to_string(i);
                if (!cfg.literal_attention) {
                    fn(blk + "/att/W1",
                       std::vector<int>{kAttentionHidden, kAttentionIn}, kAttentionIn);
                    fn(blk + "/att/b1", std::vector<int>{kAttentionHidden}, 0);
                    fn(blk + "/att/W2",
                       std::vector<int>{kFeatureTypes, kAttentionHidden}, kAttentionHidden);
                    fn(blk + "/att/b2", std::vector<int>{kFeatureTypes}, 0);
                }
                int layer_dim = (*counts[k])[i] + 2;  // sorted values + mean + max
                fn(blk + "/fc1/W", std::vector<int>{W, W + layer_dim}, W + layer_dim);
                fn(blk + "/fc1/b", std::vector<int>{W}, 0);
                fn(blk + "/fc2/W", std::vector<int>{W, W}, W);
                fn(blk + "/fc2/b", std::vector<int>{W}, 0);
            }
        }
    }
    int M = cfg.merge_width;
    for (int t = 0; t < kFeatureTypes; ++t) {
        std::string base = std::string("merge/") + kTauNames[t];
        fn(base + "/W", std::vector<int>{M, 2 * W}, 2 * W);
        fn(base + "/b", std::vector<int>{M}, 0);
    }
    fn("merge/cross/W", std::vector<int>{M, kFeatureTypes * M}, kFeatureTypes * M);
    fn("merge/cross/b", std::vector<int>{M}, 0);
    int H = cfg.head_width;
    int head_out[3] = {H, H, 3};
    int head_in[3] = {M, H, H};
    for (int l = 0; l < 3; ++l) {
        std::string base = "head/" + std::to_string(l);
        fn(base + "/W", std::vector<int>{head_out[l], head_in[l]}, head_in[l]);
        fn(base + "/b", std::vector<int>{head_out[l]}, 0);
    }
}

NetIds collect_ids(const BackboneConfig& cfg, const std::vector<int>& leaves) {
    NetIds ids;
    size_t cur = 0;
    auto take = [&]() {
        if (cur >= leaves.size()) fail(Errc::shape_mismatch, "backbone binding underflow");
        return leaves[cur++];
    };
    const std::vector<int>* counts[2] = {&cfg.diffuse_counts, &cfg.highlight_counts};
    for (int k = 0; k < 2; ++k) {
        for (int t = 0; t < kFeatureTypes; ++t) {
            StackIds& s = ids.stacks[k][t];
            s.init_W = take();
            s.init_b = take();
            s.blocks.resize(counts[k]->size());
            for (BlockIds& b : s.blocks) {
                if (!cfg.literal_attention) {
                    b.att_W1 = take();
                    b.att_b1 = take();
                    b.att_W2 = take();
                    b.att_b2 = take();
                }
                b.fc1_W = take();
                b.fc1_b = take();
                b.fc2_W = take();
                b.fc2_b = take();
            }
        }
    }
    for (int t = 0; t < kFeatureTypes; ++t) {
        ids.merge_W[t] = take();
        ids.merge_b[t] = take();
    }
    ids.cross_W = take();
    ids.cross_b = take();
    for (int l = 0; l < 3; ++l) {
        ids.head_W[l] = take();
        ids.head_b[l] = take();
    }
    if (cur != leaves.size()) fail(Errc::shape_mismatch, "backbone binding overflow");
    return ids;
}

// Per-layer slices of one feature block: raw values sorted descending
// (order statistics make the input permutation-invariant) plus the
// average and max pools that also feed the attention vector.
template <typename T>
struct LayerSlice {
    std::vector<T> sorted[kFeatureTypes];
    T mean[kFeatureTypes];
    T max[kFeatureTypes];
};

template <typename T>
std::vector<LayerSlice<T>> slice_layers(const SampleFeatureBlock& block,
                                        const std::vector<int>& counts) {
    size_t total = 0;
    for (int c : counts) total += size_t(c);
    if (block.density.size() != total || block.transmittance.size() != total ||
        block.phase.size() != total)
        fail(Errc::shape_mismatch, "feature block does not match template counts");
    const std::vector<float>* channels[kFeatureTypes] = {&block.density, &block.phase,
                                                         &block.transmittance};
    std::vector<LayerSlice<T>> out(counts.size());
    size_t off = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        size_t n = size_t(counts[i]);
        for (int t = 0; t < kFeatureTypes; ++t) {
            const std::vector<float>& src = *channels[t];
            std::vector<T>& dst = out[i].sorted[t];
            dst.resize(n);
            for (size_t j = 0; j < n; ++j) dst[j] = T(src[off + j]);
            std::sort(dst.begin(), dst.end(), std::greater<T>());
            // Pool over the sorted order so the reduction is canonical:
            // reordering the incoming points cannot perturb even the
            // last bit of the result.
            T acc = T(0);
            for (const T& v : dst) acc += v;
            out[i].mean[t] = acc / T(double(n));
            out[i].max[t] = dst[0];
        }
        off += n;
    }
    return out;
}

template <typename T>
std::vector<T> cfg_vector(const ConfigParams& cfg) {
    std::vector<T> v(kCfgDim, T(0));
    for (size_t i = 0; i < cfg.g_params.size() && i < 3; ++i) v[i] = T(cfg.g_params[i]);
    v[3] = T(cfg.albedo.x);
    v[4] = T(cfg.albedo.y);
    v[5] = T(cfg.albedo.z);
    v[6] = T(cfg.alpha);
    return v;
}

// One stack: conditioning initializes the state, then every layer runs
// attention -> FC-1 fusion -> FC-2 -> residual.
template <typename T>
int run_stack(Tape<T>& tape, const StackIds& ids, int tau, int cfg_node,
              const std::vector<LayerSlice<T>>& layers, T g_mean, T alpha,
              bool literal, int* block_counter) {
    int o = tape.relu(tape.dense(cfg_node, ids.init_W, ids.init_b));
    for (size_t i = 0; i < layers.size(); ++i) {
        const LayerSlice<T>& L = layers[i];
        const BlockIds& b = ids.blocks[i];
        std::vector<T> v = {L.mean[0], L.mean[1], L.mean[2],
                            L.max[0],  L.max[1],  L.max[2],  g_mean, alpha};
        int w;
        if (literal) {
            w = tape.leaf(Tensor<T>::scalar(attention_weight_literal(v)));
        } else {
            int vn = tape.leaf(Tensor<T>::from(v));
            int w3 = attention_weights_learned(tape, vn, b.att_W1, b.att_b1,
                                               b.att_W2, b.att_b2);
            w = tape.pick(w3, tau);
        }
        int o_att = attention_apply(tape, o, w);
        std::vector<T> h = L.sorted[tau];
        h.push_back(L.mean[tau]);
        h.push_back(L.max[tau]);
        int hn = tape.leaf(Tensor<T>::from(std::move(h)));
        int u = tape.relu(tape.dense(tape.concat({o_att, hn}), b.fc1_W, b.fc1_b));
        o = tape.add(tape.relu(tape.dense(u, b.fc2_W, b.fc2_b)), o_att);
        if (block_counter) ++*block_counter;
    }
    return o;
}

Vec3 eta_pow_gamma(const Vec3& albedo, double gamma) {
    for (double a : {albedo.x, albedo.y, albedo.z})
        if (!(a > 0.0 && a < 1.0))
            fail(Errc::bad_value, "albedo components must lie in (0,1)");
    return {std::pow(albedo.x, gamma), std::pow(albedo.y, gamma),
            std::pow(albedo.z, gamma)};
}

}  // namespace

void ConfigParams::validate(MaterialClass cls) const {
    int expected = expected_g_count(cls);
    if (int(g_params.size()) != expected)
        fail(Errc::shape_mismatch, "asymmetry parameter count does not match material class");
    for (double g : g_params)
        if (!(g > -1.0 && g < 1.0))
            fail(Errc::bad_value, "asymmetry parameter outside (-1,1)");
    for (double a : {albedo.x, albedo.y, albedo.z})
        if (!(a > 0.0 && a < 1.0))
            fail(Errc::bad_value, "config albedo outside (0,1)");
    if (!(alpha >= 0.0 && alpha <= kPi + 1e-9))
        fail(Errc::bad_value, "alpha must be an angle in [0, pi]");
}

ConfigParams make_config(const MediumProperties& props, const PhaseModel& phase,
                         const Vec3& omega, const Vec3& light_dir) {
    phase.validate();
    ConfigParams cfg;
    if (phase.kind == PhaseKind::Isotropic) {
        cfg.g_params.assign(size_t(expected_g_count(props.material_class)), 0.0);
    } else {
        for (const PhaseLobe& lobe : phase.lobes) cfg.g_params.push_back(lobe.g);
    }
    cfg.albedo = props.albedo;
    cfg.alpha = angle_between(omega, light_dir);
    cfg.validate(props.material_class);
    return cfg;
}

std::string BackboneConfig::to_json() const {
    nlohmann::json j;
    j["diffuse_counts"] = diffuse_counts;
    j["highlight_counts"] = highlight_counts;
    j["width"] = width;
    j["merge_width"] = merge_width;
    j["head_width"] = head_width;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["literal_attention"] = literal_attention;
    return j.dump();
}

BackboneConfig BackboneConfig::from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
    if (j.is_discarded()) fail(Errc::malformed_header, "invalid backbone config JSON");
    BackboneConfig cfg;
    try {
        cfg.diffuse_counts = j.at("diffuse_counts").get<std::vector<int>>();
        cfg.highlight_counts = j.at("highlight_counts").get<std::vector<int>>();
        cfg.width = j.at("width").get<int>();
        cfg.merge_width = j.at("merge_width").get<int>();
        cfg.head_width = j.at("head_width").get<int>();
        cfg.gamma = j.at("gamma").get<double>();
        cfg.seed = j.at("seed").get<uint64_t>();
        cfg.literal_attention = j.at("literal_attention").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("backbone config: ") + e.what());
    }
    return cfg;
}

template <typename T>
Backbone<T> make_backbone(const BackboneConfig& config) {
    if (config.diffuse_counts.empty() || config.highlight_counts.empty())
        fail(Errc::invalid_argument, "backbone needs at least one layer per template kind");
    if (config.width < 1 || config.merge_width < 1 || config.head_width < 1)
        fail(Errc::invalid_argument, "backbone widths must be positive");
    for (int c : config.diffuse_counts)
        if (c < 1) fail(Errc::invalid_argument, "layer counts must be positive");
    for (int c : config.highlight_counts)
        if (c < 1) fail(Errc::invalid_argument, "layer counts must be positive");
    Backbone<T> net;
    net.config = config;
    size_t ordinal = 0;
    walk_params(config, [&](const std::string& name, std::vector<int> shape, int fan_in) {
        uint64_t seed = splitmix64(config.seed + 0x5eedu * uint64_t(ordinal + 1));
        Tensor<T> init = fan_in > 0 ? he_uniform<T>(std::move(shape), fan_in, seed)
                                    : Tensor<T>::zeros(std::move(shape));
        net.params.add(name, std::move(init));
        ++ordinal;
    });
    return net;
}

template <typename T>
BoundBackbone<T> bind_backbone(Tape<T>& tape, const Backbone<T>& net) {
    BoundBackbone<T> bound;
    bound.net = &net;
    bound.tape = &tape;
    bound.leaves.reserve(net.params.params.size());
    for (const Param<T>& p : net.params.params) bound.leaves.push_back(tape.leaf(p.value));
    return bound;
}

template <typename T>
void accumulate_grads(const BoundBackbone<T>& bound, Backbone<T>& net) {
    if (bound.leaves.size() != net.params.params.size())
        fail(Errc::shape_mismatch, "binding does not match network");
    for (size_t i = 0; i < bound.leaves.size(); ++i) {
        const Tensor<T>& g = bound.tape->grad(bound.leaves[i]);
        Tensor<T>& dst = net.params.params[i].grad;
        for (size_t j = 0; j < dst.size(); ++j) dst[j] += g[j];
    }
}

template <typename T>
int backbone_forward(const BoundBackbone<T>& bound, const SampleFeatureBlock& diffuse,
                     const SampleFeatureBlock& highlight, const ConfigParams& cfg,
                     ForwardCounts* counts) {
    Tape<T>& tape = *bound.tape;
    const BackboneConfig& bc = bound.net->config;
    NetIds ids = collect_ids(bc, bound.leaves);

    std::vector<LayerSlice<T>> dl = slice_layers<T>(diffuse, bc.diffuse_counts);
    std::vector<LayerSlice<T>> hl = slice_layers<T>(highlight, bc.highlight_counts);
    T g_mean = T(0);
    for (double g : cfg.g_params) g_mean += T(g);
    if (!cfg.g_params.empty()) g_mean /= T(double(cfg.g_params.size()));
    T alpha = T(cfg.alpha);
    int cfg_node = tape.leaf(Tensor<T>::from(cfg_vector<T>(cfg)));

    int merged[kFeatureTypes];
    for (int t = 0; t < kFeatureTypes; ++t) {
        int* cd = counts ? &counts->diffuse[size_t(t)] : nullptr;
        int* ch = counts ? &counts->highlight[size_t(t)] : nullptr;
        int od = run_stack(tape, ids.stacks[0][t], t, cfg_node, dl, g_mean, alpha,
                           bc.literal_attention, cd);
        int oh = run_stack(tape, ids.stacks[1][t], t, cfg_node, hl, g_mean, alpha,
                           bc.literal_attention, ch);
        merged[t] = tape.relu(
            tape.dense(tape.concat({od, oh}), ids.merge_W[t], ids.merge_b[t]));
    }
    int cross = tape.relu(tape.dense(tape.concat({merged[0], merged[1], merged[2]}),
                                     ids.cross_W, ids.cross_b));
    int h = cross;
    for (int l = 0; l < 2; ++l) h = tape.relu(tape.dense(h, ids.head_W[l], ids.head_b[l]));
    // Output activation |x|: nonnegative y with activation(0) = 0, and
    // gradients that survive negative preactivations (a relu output can
    // collapse the 3-wide head into a dead all-zero prediction).
    return tape.abs(tape.dense(h, ids.head_W[2], ids.head_b[2]));
}

Vec3 predict_y(const Backbone<float>& net, const SampleFeatureBlock& diffuse,
               const SampleFeatureBlock& highlight, const ConfigParams& cfg) {
    Tape<float> tape;
    BoundBackbone<float> bound = bind_backbone(tape, net);
    int y = backbone_forward(bound, diffuse, highlight, cfg);
    const Tensor<float>& yv = tape.value(y);
    return {double(yv[0]), double(yv[1]), double(yv[2])};
}

Vec3 encode_label(const Vec3& F, const Vec3& albedo, double gamma) {
    for (double f : {F.x, F.y, F.z})
        if (!(f >= 0.0)) fail(Errc::bad_value, "labels must be nonnegative");
    Vec3 eg = eta_pow_gamma(albedo, gamma);
    return {std::log(F.x / eg.x + 1.0), std::log(F.y / eg.y + 1.0),
            std::log(F.z / eg.z + 1.0)};
}

Vec3 decode_prediction(const Vec3& y, const Vec3& albedo, double gamma) {
    Vec3 eg = eta_pow_gamma(albedo, gamma);
    return {eg.x * std::expm1(y.x), eg.y * std::expm1(y.y), eg.z * std::expm1(y.z)};
}

double loss_ls(const Vec3& pred_F, const Vec3& label_F, const Vec3& albedo,
               double gamma) {
    Vec3 yp = encode_label(pred_F, albedo, gamma);
    Vec3 yl = encode_label(label_F, albedo, gamma);
    Vec3 d = yp - yl;
    return (d.x * d.x + d.y * d.y + d.z * d.z) / 3.0;
}

namespace {

// Mean y-space loss of one forward against a precomputed target.
template <typename T>
int sample_loss(Tape<T>& tape, const BoundBackbone<T>& bound,
                const DatasetEntry& entry, const ConfigParams& cfg,
                const std::vector<T>& target) {
    int y = backbone_forward(bound, entry.diffuse, entry.highlight, cfg);
    int t = tape.leaf(Tensor<T>::from(target));
    return tape.mean_all(tape.square(tape.sub(y, t)));
}

double full_split_loss(const Backbone<float>& net, const DatasetZ& dataset,
                       const std::vector<size_t>& indices,
                       const std::vector<ConfigParams>& cfgs,
                       const std::vector<std::vector<float>>& targets) {
    if (indices.empty()) return 0.0;
    double acc = 0.0;
    for (size_t ix : indices) {
        Tape<float> tape;
        BoundBackbone<float> bound = bind_backbone(tape, net);
        int loss = sample_loss(tape, bound, dataset.entries[ix], cfgs[ix], targets[ix]);
        acc += double(tape.value(loss)[0]);
    }
    return acc / double(indices.size());
}

}  // namespace

TrainResult train_backbone(Backbone<float>& net, const DatasetZ& dataset,
                           const MediumProperties& props, const PhaseModel& phase,
                           const TrainOptions& opts) {
    if (dataset.entries.empty()) fail(Errc::invalid_argument, "training dataset is empty");
    if (opts.steps < 1 || opts.batch < 1)
        fail(Errc::invalid_argument, "steps and batch size must be positive");
    props.validate();

    size_t n = dataset.entries.size();
    std::vector<ConfigParams> cfgs(n);
    std::vector<std::vector<float>> targets(n);
    for (size_t i = 0; i < n; ++i) {
        const DatasetEntry& e = dataset.entries[i];
        cfgs[i] = make_config(props, phase, e.diffuse.omega, e.diffuse.light);
        Vec3 t = encode_label(e.label.F, props.albedo, net.config.gamma);
        targets[i] = {float(t.x), float(t.y), float(t.z)};
    }

    // 10% validation holdout by index hash.
    std::vector<size_t> train_ix, val_ix;
    for (size_t i = 0; i < n; ++i)
        (splitmix64(uint64_t(i)) % 10 == 0 ? val_ix : train_ix).push_back(i);
    if (train_ix.empty()) fail(Errc::invalid_argument, "validation split consumed every entry");

    TrainResult result;
    result.train_count = train_ix.size();
    result.val_count = val_ix.size();
    result.initial_train_loss = full_split_loss(net, dataset, train_ix, cfgs, targets);
    double val_loss = full_split_loss(net, dataset, val_ix, cfgs, targets);

    size_t batch = std::min(size_t(opts.batch), train_ix.size());
    size_t epoch_len = train_ix.size() / batch;  // >= 1
    std::vector<size_t> order = train_ix;

    Tape<float> tape;
    for (int step = 0; step < opts.steps; ++step) {
        size_t slot = size_t(step) % epoch_len;
        if (slot == 0 && epoch_len > 1) {
            // Fisher-Yates reshuffle at each epoch boundary, seeded by
            // the epoch ordinal for schedule-independent determinism.
            Pcg32 rng(opts.seed, 0x9000u + uint64_t(step) / epoch_len);
            for (size_t i = order.size() - 1; i > 0; --i) {
                size_t j = size_t(rng.next_below(uint32_t(i + 1)));
                std::swap(order[i], order[j]);
            }
        }
        tape.clear();
        BoundBackbone<float> bound = bind_backbone(tape, net);
        std::vector<int> losses;
        losses.reserve(batch);
        for (size_t b = 0; b < batch; ++b) {
            size_t ix = order[slot * batch + b];
            losses.push_back(sample_loss(tape, bound, dataset.entries[ix], cfgs[ix],
                                         targets[ix]));
        }
        int total = tape.mean_all(tape.concat(losses));
        double batch_loss = double(tape.value(total)[0]);
        if (!std::isfinite(batch_loss))
            fail(Errc::numeric, "non-finite training loss at step " + std::to_string(step));
        tape.backward(total);
        net.params.zero_grads();
        accumulate_grads(bound, net);
        adam_step(net.params, opts.adam);

        if (opts.val_every > 0 && (step + 1) % opts.val_every == 0)
            val_loss = full_split_loss(net, dataset, val_ix, cfgs, targets);
        result.curve.push_back({step + 1, batch_loss, val_loss});
    }
    tape.clear();

    result.final_train_loss = full_split_loss(net, dataset, train_ix, cfgs, targets);
    result.final_val_loss = full_split_loss(net, dataset, val_ix, cfgs, targets);

    if (!opts.loss_csv_path.empty()) {
        std::ofstream csv(opts.loss_csv_path);
        if (!csv) fail(Errc::io, "cannot open for write: " + opts.loss_csv_path);
        csv << "step,train_loss,val_loss\n";
        for (const TrainCurvePoint& p : result.curve)
            csv << p.step << ',' << p.train_loss << ',' << p.val_loss << '\n';
    }
    return result;
}

std::vector<Vec3> predict_field(const Backbone<float>& net, const FeatureTable& table,
                                const MediumProperties& props, const PhaseModel& phase) {
    if (table.diffuse.size() != table.highlight.size())
        fail(Errc::shape_mismatch, "feature table kinds disagree on center count");
    std::vector<Vec3> out(table.diffuse.size());
    parallel_for(out.size(), [&](size_t i) {
        const SampleFeatureBlock& d = table.diffuse[i];
        ConfigParams cfg = make_config(props, phase, d.omega, d.light);
        Vec3 y = predict_y(net, d, table.highlight[i], cfg);
        out[i] = decode_prediction(y, props.albedo, net.config.gamma);
    });
    return out;
}

namespace {

// Per-channel scattering field baked on the density lattice; sampled
// with the same trilinear rule the density uses, zero outside.
struct BakedField {
    DensityGrid r, g, b;

    Vec3 sample(const Vec3& p) const {
        return {r.sample_trilinear(p), g.sample_trilinear(p), b.sample_trilinear(p)};
    }
};

// Evaluates `eval(p, omega)` at every occupied voxel center with the
// view direction toward that voxel from the camera.
template <typename EvalFn>
BakedField bake_field(const Medium& medium, const Camera& camera, EvalFn&& eval) {
    const DensityGrid& grid = medium.grid;
    BakedField field;
    field.r = field.g = field.b =
        DensityGrid(grid.nx(), grid.ny(), grid.nz(), grid.voxel_size(), grid.origin());
    size_t total = grid.values().size();
    parallel_for(total, [&](size_t idx) {
        int x = int(idx % size_t(grid.nx()));
        int y = int((idx / size_t(grid.nx())) % size_t(grid.ny()));
        int z = int(idx / (size_t(grid.nx()) * size_t(grid.ny())));
        if (grid.at(x, y, z) <= 0.0f) return;
        Vec3 p = grid.origin() + Vec3{(x + 0.5) * grid.voxel_size(),
                                      (y + 0.5) * grid.voxel_size(),
                                      (z + 0.5) * grid.voxel_size()};
        Vec3 omega = normalize(p - camera.position());
        Vec3 F = eval(p, omega);
        field.r.set(x, y, z, float(F.x));
        field.g.set(x, y, z, float(F.y));
        field.b.set(x, y, z, float(F.z));
    });
    return field;
}

}  // namespace

ImageF render_neural(const Medium& medium, const DistantLight& light,
                     const Camera& camera, const Backbone<float>& net,
                     const FeatureTable& table, const SamplingTemplate& diffuse_tmpl,
                     const SamplingTemplate& highlight_tmpl, const FeatureConfig& fcfg,
                     const RenderOptions& ropts) {
    medium.props.validate();
    medium.phase.validate();
    light.validate();
    FeatureConfig cfg = fcfg;
    cfg.lambda = table.lambda;
    cfg.template_scale = table.template_scale;
    DensityPyramid pyramid(medium.grid);
    TransmittanceFeatureVolume tvol =
        build_transmittance_volume(pyramid, light.direction, table.combiner, cfg);
    BakedField field = bake_field(medium, camera, [&](const Vec3& p, const Vec3& omega) {
        SampleFeatureBlock d =
            sample_features(p, omega, light.direction, diffuse_tmpl, medium.grid, tvol,
                            medium.phase, table.phase_table, cfg.template_scale);
        SampleFeatureBlock h =
            sample_features(p, omega, light.direction, highlight_tmpl, medium.grid, tvol,
                            medium.phase, table.phase_table, cfg.template_scale);
        ConfigParams cp = make_config(medium.props, medium.phase, omega, light.direction);
        Vec3 y = predict_y(net, d, h, cp);
        return decode_prediction(y, medium.props.albedo, net.config.gamma);
    });
    InscatterProvider provider = [&field](const Vec3& p, const Vec3&, uint32_t) {
        return field.sample(p);
    };
    return render_volume(medium, camera, provider, ropts);
}

ImageF render_injected(const Medium& medium, const DistantLight& light,
                       const Camera& camera, int spp, uint64_t seed,
                       const RenderOptions& ropts) {
    PathTraceOptions topts;
    topts.step_scale = ropts.step_scale;
    BakedField field = bake_field(medium, camera, [&](const Vec3& p, const Vec3& omega) {
        uint64_t s = splitmix64(seed ^ (uint64_t(p.x * 8191.0) * 0x9e3779b97f4a7c15ULL));
        return path_trace_inscatter(medium, light, p, omega, spp, s, topts).F;
    });
    InscatterProvider provider = [&field](const Vec3& p, const Vec3&, uint32_t) {
        return field.sample(p);
    };
    return render_volume(medium, camera, provider, ropts);
}

void save_backbone(const Backbone<float>& net, const std::string& path) {
    save_network(net.params, net.config.to_json(), path);
}

Backbone<float> load_backbone(const std::string& path) {
    LoadedNetwork loaded = load_network(path);
    BackboneConfig cfg = BackboneConfig::from_json(loaded.config_json);
    Backbone<float> net = make_backbone<float>(cfg);
    if (loaded.store.params.size() != net.params.params.size())
        fail(Errc::shape_mismatch, "network file parameter count mismatch");
    for (size_t i = 0; i < net.params.params.size(); ++i) {
        Param<float>& dst = net.params.params[i];
        Param<float>& src = loaded.store.params[i];
        if (src.name != dst.name || src.value.shape != dst.value.shape)
            fail(Errc::shape_mismatch, "network file parameter layout mismatch: " + src.name);
        dst.value = std::move(src.value);
    }
    return net;
}

template Backbone<float> make_backbone<float>(const BackboneConfig&);
template Backbone<double> make_backbone<double>(const BackboneConfig&);
template BoundBackbone<float> bind_backbone<float>(Tape<float>&, const Backbone<float>&);
template BoundBackbone<double> bind_backbone<double>(Tape<double>&, const Backbone<double>&);
template void accumulate_grads<float>(const BoundBackbone<float>&, Backbone<float>&);
template void accumulate_grads<double>(const BoundBackbone<double>&, Backbone<double>&);
template int backbone_forward<float>(const BoundBackbone<float>&, const SampleFeatureBlock&,
                                     const SampleFeatureBlock&, const ConfigParams&,
                                     ForwardCounts*);
template int backbone_forward<double>(const BoundBackbone<double>&, const SampleFeatureBlock&,
                                      const SampleFeatureBlock&, const ConfigParams&,
                                      ForwardCounts*);

}  // namespace scatterfield
