// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/neural.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <utility>

#include "scatterfield/digest.h"
#include "scatterfield/error.h"
#include "scatterfield/rng.h"
#include "wire.h"

namespace scatterfield {

namespace {

size_t shape_size(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) fail(Errc::bad_dims, "tensor dims must be positive");
        n *= size_t(d);
    }
    return n;
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
#ifndef NDEBUG
    for (const T& x : t.v) {
        if (!std::isfinite(double(x))) fail(Errc::numeric, std::string(op) + " produced a non-finite value");
    }
#else
    (void)t;
    (void)op;
#endif
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::zeros(std::vector<int> shape) {
    Tensor<T> t;
    size_t n = shape_size(shape);
    t.shape = std::move(shape);
    t.v.assign(n, T(0));
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T x) {
    Tensor<T> t;
    t.shape = {1};
    t.v = {x};
    return t;
}

template <typename T>
Tensor<T> Tensor<T>::from(std::vector<T> values) {
    Tensor<T> t;
    t.shape = {int(values.size())};
    t.v = std::move(values);
    return t;
}

template <typename T>
int Tape<T>::push(Tensor<T> value, std::function<void()> back) {
    check_finite(value, "tape op");
    Entry e;
    e.grad = Tensor<T>::zeros(value.shape);
    e.value = std::move(value);
    e.back = std::move(back);
    entries_.push_back(std::move(e));
    return int(entries_.size()) - 1;
}

template <typename T>
int Tape<T>::leaf(Tensor<T> value) {
    return push(std::move(value), {});
}

template <typename T>
int Tape<T>::dense(int x, int W, int b) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& Wv = value(W);
    const Tensor<T>& bv = value(b);
    if (Wv.shape.size() != 2) fail(Errc::shape_mismatch, "dense weight must be rank 2");
    int m = Wv.shape[0], n = Wv.shape[1];
    if (int(xv.size()) != n || int(bv.size()) != m)
        fail(Errc::shape_mismatch, "dense operand sizes disagree");
    Tensor<T> out = Tensor<T>::zeros({m});
    for (int i = 0; i < m; ++i) {
        T acc = bv[size_t(i)];
        const T* row = &Wv[size_t(i) * size_t(n)];
        for (int j = 0; j < n; ++j) acc += row[j] * xv[size_t(j)];
        out[size_t(i)] = acc;
    }
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x, W, b, m, n] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        const Tensor<T>& Wv2 = value(W);
        Tensor<T>& gx = grad_mut(x);
        Tensor<T>& gW = grad_mut(W);
        Tensor<T>& gb = grad_mut(b);
        for (int i = 0; i < m; ++i) {
            T gi = g[size_t(i)];
            gb[size_t(i)] += gi;
            const T* row = &Wv2[size_t(i) * size_t(n)];
            T* grow = &gW[size_t(i) * size_t(n)];
            for (int j = 0; j < n; ++j) {
                grow[j] += gi * xv2[size_t(j)];
                gx[size_t(j)] += gi * row[j];
            }
        }
    };
    return id;
}

template <typename T>
int Tape<T>::conv3(int x, int kernel) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& kv = value(kernel);
    if (xv.shape.size() != 3) fail(Errc::shape_mismatch, "conv3 input must be rank 3");
    if (kv.size() != 27) fail(Errc::shape_mismatch, "conv3 kernel must have 27 taps");
    int nx = xv.shape[0], ny = xv.shape[1], nz = xv.shape[2];
    auto idx = [nx, ny, nz](int ix, int iy, int iz) {
        ix = std::clamp(ix, 0, nx - 1);
        iy = std::clamp(iy, 0, ny - 1);
        iz = std::clamp(iz, 0, nz - 1);
        return (size_t(ix) * size_t(ny) + size_t(iy)) * size_t(nz) + size_t(iz);
    };
    Tensor<T> out = Tensor<T>::zeros(xv.shape);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            for (int iz = 0; iz < nz; ++iz) {
                T acc = T(0);
                int tap = 0;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx)
                            acc += kv[size_t(tap++)] * xv[idx(ix + dx, iy + dy, iz + dz)];
                out[idx(ix, iy, iz)] = acc;
            }
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x, kernel, nx, ny, nz, idx] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        const Tensor<T>& kv2 = value(kernel);
        Tensor<T>& gx = grad_mut(x);
        Tensor<T>& gk = grad_mut(kernel);
        for (int ix = 0; ix < nx; ++ix)
            for (int iy = 0; iy < ny; ++iy)
                for (int iz = 0; iz < nz; ++iz) {
                    T go = g[idx(ix, iy, iz)];
                    if (go == T(0)) continue;
                    int tap = 0;
                    for (int dz = -1; dz <= 1; ++dz)
                        for (int dy = -1; dy <= 1; ++dy)
                            for (int dx = -1; dx <= 1; ++dx) {
                                size_t src = idx(ix + dx, iy + dy, iz + dz);
                                gk[size_t(tap)] += go * xv2[src];
                                gx[src] += go * kv2[size_t(tap)];
                                ++tap;
                            }
                }
    };
    return id;
}

template <typename T>
int Tape<T>::relu(int x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out = xv;
    for (T& y : out.v) y = std::max(y, T(0));
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        Tensor<T>& gx = grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i)
            if (xv2[i] > T(0)) gx[i] += g[i];
    };
    return id;
}

template <typename T>
int Tape<T>::abs(int x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out = xv;
    for (T& y : out.v) y = std::fabs(y);
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        Tensor<T>& gx = grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i) {
            if (xv2[i] > T(0)) gx[i] += g[i];
            else if (xv2[i] < T(0)) gx[i] -= g[i];
        }
    };
    return id;
}

template <typename T>
int Tape<T>::sigmoid(int x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out = xv;
    for (T& y : out.v) y = T(1) / (T(1) + std::exp(-y));
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& yv = value(id);
        Tensor<T>& gx = grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (T(1) - yv[i]);
    };
    return id;
}

template <typename T>
int Tape<T>::softplus(int x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out = xv;
    // log1p(exp(x)) with the large-x branch to avoid overflow.
    for (T& y : out.v) y = y > T(20) ? y : T(std::log1p(std::exp(double(y))));
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        Tensor<T>& gx = grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i)
            gx[i] += g[i] / (T(1) + std::exp(-xv2[i]));
    };
    return id;
}

template <typename T>
int Tape<T>::add(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (av.size() != bv.size()) fail(Errc::shape_mismatch, "add operand sizes disagree");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, a, b] {
        const Tensor<T>& g = grad(id);
        Tensor<T>& ga = grad_mut(a);
        Tensor<T>& gb = grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    };
    return id;
}

template <typename T>
int Tape<T>::sub(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (av.size() != bv.size()) fail(Errc::shape_mismatch, "sub operand sizes disagree");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, a, b] {
        const Tensor<T>& g = grad(id);
        Tensor<T>& ga = grad_mut(a);
        Tensor<T>& gb = grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    };
    return id;
}

template <typename T>
int Tape<T>::mul(int a, int b) {
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    if (av.size() != bv.size()) fail(Errc::shape_mismatch, "mul operand sizes disagree");
    Tensor<T> out = av;
    for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, a, b] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& av2 = value(a);
        const Tensor<T>& bv2 = value(b);
        Tensor<T>& ga = grad_mut(a);
        Tensor<T>& gb = grad_mut(b);
        for (size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * bv2[i];
            gb[i] += g[i] * av2[i];
        }
    };
    return id;
}

template <typename T>
int Tape<T>::scale(int x, int s) {
    const Tensor<T>& xv = value(x);
    const Tensor<T>& sv = value(s);
    if (sv.size() != 1) fail(Errc::shape_mismatch, "scale factor must be scalar");
    Tensor<T> out = xv;
    for (T& y : out.v) y *= sv[0];
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x, s] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        const Tensor<T>& sv2 = value(s);
        Tensor<T>& gx = grad_mut(x);
        Tensor<T>& gs = grad_mut(s);
        for (size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * sv2[0];
            gs[0] += g[i] * xv2[i];
        }
    };
    return id;
}

template <typename T>
int Tape<T>::concat(const std::vector<int>& xs) {
    if (xs.empty()) fail(Errc::invalid_argument, "concat needs at least one operand");
    size_t total = 0;
    for (int x : xs) total += value(x).size();
    Tensor<T> out = Tensor<T>::zeros({int(total)});
    size_t off = 0;
    for (int x : xs) {
        const Tensor<T>& xv = value(x);
        std::copy(xv.v.begin(), xv.v.end(), out.v.begin() + long(off));
        off += xv.size();
    }
    int id = push(std::move(out), {});
    std::vector<int> parents = xs;
    entries_[size_t(id)].back = [this, id, parents] {
        const Tensor<T>& g = grad(id);
        size_t off2 = 0;
        for (int x : parents) {
            Tensor<T>& gx = grad_mut(x);
            for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[off2 + i];
            off2 += gx.size();
        }
    };
    return id;
}

template <typename T>
int Tape<T>::pick(int x, int index) {
    const Tensor<T>& xv = value(x);
    if (index < 0 || size_t(index) >= xv.size()) fail(Errc::invalid_argument, "pick index out of range");
    int id = push(Tensor<T>::scalar(xv[size_t(index)]), {});
    entries_[size_t(id)].back = [this, id, x, index] {
        grad_mut(x)[size_t(index)] += grad(id)[0];
    };
    return id;
}

template <typename T>
int Tape<T>::mean_all(int x) {
    const Tensor<T>& xv = value(x);
    T acc = T(0);
    for (const T& y : xv.v) acc += y;
    T n = T(double(xv.size()));
    int id = push(Tensor<T>::scalar(acc / n), {});
    entries_[size_t(id)].back = [this, id, x, n] {
        const T g = grad(id)[0] / n;
        Tensor<T>& gx = grad_mut(x);
        for (T& y : gx.v) y += g;
    };
    return id;
}

template <typename T>
int Tape<T>::max_all(int x) {
    const Tensor<T>& xv = value(x);
    size_t arg = 0;
    for (size_t i = 1; i < xv.size(); ++i)
        if (xv[i] > xv[arg]) arg = i;
    int id = push(Tensor<T>::scalar(xv[arg]), {});
    entries_[size_t(id)].back = [this, id, x, arg] {
        grad_mut(x)[arg] += grad(id)[0];
    };
    return id;
}

template <typename T>
int Tape<T>::square(int x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out = xv;
    for (T& y : out.v) y *= y;
    int id = push(std::move(out), {});
    entries_[size_t(id)].back = [this, id, x] {
        const Tensor<T>& g = grad(id);
        const Tensor<T>& xv2 = value(x);
        Tensor<T>& gx = grad_mut(x);
        for (size_t i = 0; i < g.size(); ++i) gx[i] += T(2) * g[i] * xv2[i];
    };
    return id;
}

template <typename T>
void Tape<T>::backward(int root) {
    if (root < 0 || size_t(root) >= entries_.size()) fail(Errc::invalid_argument, "backward root out of range");
    if (value(root).size() != 1) fail(Errc::shape_mismatch, "backward root must be scalar");
    grad_mut(root)[0] = T(1);
    for (int id = root; id >= 0; --id)
        if (entries_[size_t(id)].back) entries_[size_t(id)].back();
}

template <typename T>
void Tape<T>::clear() {
    entries_.clear();
}

template <typename T>
int ParamStore<T>::add(const std::string& name, Tensor<T> init) {
    if (find(name) >= 0) fail(Errc::invalid_argument, "duplicate parameter name: " + name);
    Param<T> p;
    p.name = name;
    p.grad = Tensor<T>::zeros(init.shape);
    p.m = Tensor<T>::zeros(init.shape);
    p.s = Tensor<T>::zeros(init.shape);
    p.value = std::move(init);
    params.push_back(std::move(p));
    return int(params.size()) - 1;
}

template <typename T>
int ParamStore<T>::find(const std::string& name) const {
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return int(i);
    return -1;
}

template <typename T>
void ParamStore<T>::zero_grads() {
    for (Param<T>& p : params) std::fill(p.grad.v.begin(), p.grad.v.end(), T(0));
}

template <typename T>
Tensor<T> he_uniform(std::vector<int> shape, int fan_in, uint64_t seed) {
    if (fan_in <= 0) fail(Errc::invalid_argument, "fan_in must be positive");
    Tensor<T> t = Tensor<T>::zeros(std::move(shape));
    double bound = std::sqrt(6.0 / double(fan_in));
    Pcg32 rng(seed, 0xfeedu);
    for (T& y : t.v) y = T((2.0 * rng.next_double() - 1.0) * bound);
    return t;
}

template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
    store.step_count += 1;
    double t = double(store.step_count);
    double corr1 = 1.0 - std::pow(cfg.beta1, t);
    double corr2 = 1.0 - std::pow(cfg.beta2, t);
    for (Param<T>& p : store.params) {
        for (size_t i = 0; i < p.value.size(); ++i) {
            double g = double(p.grad[i]);
            double m = cfg.beta1 * double(p.m[i]) + (1.0 - cfg.beta1) * g;
            double s = cfg.beta2 * double(p.s[i]) + (1.0 - cfg.beta2) * g * g;
            p.m[i] = T(m);
            p.s[i] = T(s);
            double update = cfg.lr * (m / corr1) / (std::sqrt(s / corr2) + cfg.eps);
            p.value[i] = T(double(p.value[i]) - update);
        }
    }
}

template <typename T>
T attention_weight_literal(const std::vector<T>& v) {
    if (v.empty()) fail(Errc::invalid_argument, "attention input must be non-empty");
    T acc = T(0);
    for (const T& x : v) acc += std::max(x, T(0));
    T mean = acc / T(double(v.size()));
    return T(1) / (T(1) + std::exp(-mean));
}

template <typename T>
int attention_weights_learned(Tape<T>& tape, int v, int W1, int b1, int W2, int b2) {
    int h = tape.relu(tape.dense(v, W1, b1));
    return tape.sigmoid(tape.dense(h, W2, b2));
}

template <typename T>
int attention_apply(Tape<T>& tape, int features, int weight) {
    return tape.scale(features, weight);
}

void save_network(const ParamStore<float>& store, const std::string& config_json,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot open for write: " + path);
    out.write("VNET", 4);
    wire::write_u32(out, 1);
    std::string digest = sha256_hex(config_json);
    out.write(digest.data(), 64);
    wire::write_u32(out, uint32_t(config_json.size()));
    out.write(config_json.data(), long(config_json.size()));
    wire::write_u32(out, uint32_t(store.params.size()));
    for (const Param<float>& p : store.params) {
        wire::write_u32(out, uint32_t(p.name.size()));
        out.write(p.name.data(), long(p.name.size()));
        wire::write_u32(out, uint32_t(p.value.shape.size()));
        for (int d : p.value.shape) wire::write_u32(out, uint32_t(d));
        for (float x : p.value.v) wire::write_f32(out, x);
    }
    if (!out) fail(Errc::io, "write failed: " + path);
}

LoadedNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VNET", 4) != 0)
        fail(Errc::malformed_header, "not a network file: " + path);
    uint32_t version = wire::read_u32(in);
    if (version != 1) fail(Errc::malformed_header, "unsupported network version");
    LoadedNetwork net;
    char digest[64];
    in.read(digest, 64);
    if (!in) fail(Errc::truncated, "truncated network header");
    net.arch_digest.assign(digest, 64);
    uint32_t json_len = wire::read_u32(in);
    net.config_json.resize(json_len);
    in.read(net.config_json.data(), long(json_len));
    if (!in) fail(Errc::truncated, "truncated network config");
    if (sha256_hex(net.config_json) != net.arch_digest)
        fail(Errc::provenance_mismatch, "architecture digest mismatch in " + path);
    uint32_t count = wire::read_u32(in);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = wire::read_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), long(name_len));
        uint32_t rank = wire::read_u32(in);
        std::vector<int> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = int(wire::read_u32(in));
        if (!in) fail(Errc::truncated, "truncated parameter header");
        Tensor<float> value = Tensor<float>::zeros(shape);
        for (float& x : value.v) x = wire::read_f32(in);
        if (!in) fail(Errc::truncated, "truncated parameter data: " + name);
        net.store.add(name, std::move(value));
    }
    return net;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template struct ParamStore<float>;
template struct ParamStore<double>;
template Tensor<float> he_uniform<float>(std::vector<int>, int, uint64_t);
template Tensor<double> he_uniform<double>(std::vector<int>, int, uint64_t);
template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);
template float attention_weight_literal<float>(const std::vector<float>&);
template double attention_weight_literal<double>(const std::vector<double>&);
template int attention_weights_learned<float>(Tape<float>&, int, int, int, int, int);
template int attention_weights_learned<double>(Tape<double>&, int, int, int, int, int);
template int attention_apply<float>(Tape<float>&, int, int);
template int attention_apply<double>(Tape<double>&, int, int);

}  // namespace scatterfield
