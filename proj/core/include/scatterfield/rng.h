// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "scatterfield/math.h"

namespace scatterfield {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// PCG32 (XSH-RR). Streams derived from (seed, sequence) are independent,
// which is what keeps parallel estimators schedule-invariant: every work
// item owns the stream (seed, item_index) regardless of which thread runs it.
class Pcg32 {
public:
    Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
    Pcg32(uint64_t seed, uint64_t sequence = 1) {
        state_ = 0;
        inc_ = (splitmix64(sequence) << 1u) | 1u;
        next_u32();
        state_ += splitmix64(seed);
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31));
    }

    // Uniform in [0, 1).
    double next_double() {
        uint64_t hi = next_u32();
        uint64_t lo = next_u32();
        return static_cast<double>((hi << 21) ^ (lo >> 11)) * 0x1p-53;
    }

    float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1p-24f; }

    // Uniform integer in [0, n).
    uint32_t next_below(uint32_t n) {
        uint64_t m = static_cast<uint64_t>(next_u32()) * n;
        return static_cast<uint32_t>(m >> 32);
    }

    Vec3 next_unit_vector() {
        double z = 1.0 - 2.0 * next_double();
        double phi = 2.0 * kPi * next_double();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

private:
    uint64_t state_;
    uint64_t inc_;
};

}  // namespace scatterfield
