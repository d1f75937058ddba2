// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian scalar IO shared by the binary artifact formats.

#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "scatterfield/math.h"

namespace scatterfield::wire {

inline void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {
        (unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
        (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& out, uint64_t v) {
    write_u32(out, uint32_t(v & 0xffffffffULL));
    write_u32(out, uint32_t(v >> 32));
}

inline void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline void write_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline void write_vec3(std::ostream& out, const Vec3& v) {
    write_f64(out, v.x);
    write_f64(out, v.y);
    write_f64(out, v.z);
}

inline uint32_t read_u32(std::istream& in) {
    unsigned char b[4] = {};
    in.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

inline uint64_t read_u64(std::istream& in) {
    uint64_t lo = read_u32(in);
    uint64_t hi = read_u32(in);
    return lo | (hi << 32);
}

inline float read_f32(std::istream& in) {
    uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline double read_f64(std::istream& in) {
    uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline Vec3 read_vec3(std::istream& in) {
    Vec3 v;
    v.x = read_f64(in);
    v.y = read_f64(in);
    v.z = read_f64(in);
    return v;
}

}  // namespace scatterfield::wire
