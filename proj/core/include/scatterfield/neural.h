// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace scatterfield {

// Dense row-major value buffer. Training runs in float; the gradient
// test suites instantiate double for finite-difference headroom.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    static Tensor zeros(std::vector<int> shape);
    static Tensor scalar(T x);
    static Tensor from(std::vector<T> values);  // 1-D

    size_t size() const { return v.size(); }
    T& operator[](size_t i) { return v[i]; }
    const T& operator[](size_t i) const { return v[i]; }
};

// Reverse-mode tape. Every op appends a node holding its output value
// and a closure that scatters the node's gradient into its parents;
// backward() replays the closures in reverse creation order. Leaves
// shared by many downstream ops accumulate gradients additively, which
// is what lets one tape carry a whole batch with one parameter push.
template <typename T>
class Tape {
  public:
    int leaf(Tensor<T> value);

    // y = W x + b with x [n], W [m, n], b [m].
    int dense(int x, int W, int b);
    // Single-channel 3x3x3 convolution, replicate padding; x [nx,ny,nz],
    // kernel [27] in z-major tap order matching the feature combiner.
    int conv3(int x, int kernel);
    int relu(int x);
    // |x| elementwise; the subgradient at 0 is taken as 0. Used as the
    // output activation: it forces y >= 0 and maps 0 -> 0 like relu but
    // its gradient never vanishes on negative preactivations, so the
    // narrow output head cannot die into the all-zero fixed point.
    int abs(int x);
    int sigmoid(int x);
    int softplus(int x);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);          // elementwise, equal shapes
    int scale(int x, int s);        // s is a scalar node
    int concat(const std::vector<int>& xs);
    int pick(int x, int index);     // one component -> scalar
    int mean_all(int x);
    int max_all(int x);
    int square(int x);

    void backward(int root);  // root must be scalar; seeds d(root)=1

    const Tensor<T>& value(int id) const { return entries_[size_t(id)].value; }
    const Tensor<T>& grad(int id) const { return entries_[size_t(id)].grad; }
    size_t node_count() const { return entries_.size(); }
    void clear();

  private:
    struct Entry {
        Tensor<T> value;
        Tensor<T> grad;
        std::function<void()> back;  // empty for leaves
    };

    int push(Tensor<T> value, std::function<void()> back);
    Tensor<T>& grad_mut(int id) { return entries_[size_t(id)].grad; }

    std::vector<Entry> entries_;
};

// Named parameter with optimizer state (first/second moments).
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;  // first moment
    Tensor<T> s;  // second moment
};

template <typename T>
struct ParamStore {
    std::vector<Param<T>> params;
    int64_t step_count = 0;

    int add(const std::string& name, Tensor<T> init);
    Param<T>& at(int id) { return params[size_t(id)]; }
    const Param<T>& at(int id) const { return params[size_t(id)]; }
    int find(const std::string& name) const;  // -1 when absent
    void zero_grads();
};

// He-style uniform init, bounds +/- sqrt(6 / fan_in), seeded per call.
template <typename T>
Tensor<T> he_uniform(std::vector<int> shape, int fan_in, uint64_t seed);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected adaptive-moment update over every parameter.
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg);

// Squeeze-excite attention as printed (Eq. 25 composition): one shared
// weight w = sigmoid(mean(relu(v))) in (0, 1).
template <typename T>
T attention_weight_literal(const std::vector<T>& v);

// Learned mode: 8 -> 4 (relu) -> 3 (sigmoid), one weight per feature
// type. Returns the 3-vector node.
template <typename T>
int attention_weights_learned(Tape<T>& tape, int v, int W1, int b1, int W2, int b2);

// Eq. 26: reweight a feature block by its (scalar) attention weight.
template <typename T>
int attention_apply(Tape<T>& tape, int features, int weight);

// .vnet serialization: parameters as named little-endian f32 blocks.
// The architecture digest (SHA-256 of the config JSON) guards against
// loading weights into a mismatched network.
void save_network(const ParamStore<float>& store, const std::string& config_json,
                  const std::string& path);
struct LoadedNetwork {
    ParamStore<float> store;
    std::string config_json;
    std::string arch_digest;
};
LoadedNetwork load_network(const std::string& path);

}  // namespace scatterfield
