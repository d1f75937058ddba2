// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/scene_gen.h"

#include <algorithm>
#include <cmath>

#include "scatterfield/error.h"
#include "scatterfield/rng.h"

namespace scatterfield {

namespace {

// Hash of an integer lattice point to [0,1), stable across platforms.
double lattice_value(uint64_t seed, int64_t x, int64_t y, int64_t z) {
    uint64_t h = seed;
    h = splitmix64(h ^ uint64_t(x) * 0x8da6b343u);
    h = splitmix64(h ^ uint64_t(y) * 0xd8163841u);
    h = splitmix64(h ^ uint64_t(z) * 0xcb1ab31fu);
    return double(h >> 11) * 0x1p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinearly interpolated value noise at p (lattice units).
double value_noise(uint64_t seed, const Vec3& p) {
    double fx = std::floor(p.x), fy = std::floor(p.y), fz = std::floor(p.z);
    int64_t ix = int64_t(fx), iy = int64_t(fy), iz = int64_t(fz);
    double tx = smooth(p.x - fx), ty = smooth(p.y - fy), tz = smooth(p.z - fz);
    double acc = 0.0;
    for (int dz = 0; dz <= 1; ++dz)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) {
                double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) *
                           (dz ? tz : 1.0 - tz);
                acc += w * lattice_value(seed, ix + dx, iy + dy, iz + dz);
            }
    return acc;
}

// Fractal sum of value noise, normalized to [0,1].
double fbm(uint64_t seed, const Vec3& p, int octaves) {
    double acc = 0.0, amp = 1.0, norm = 0.0, freq = 1.0;
    for (int o = 0; o < octaves; ++o) {
        acc += amp * value_noise(seed + uint64_t(o) * 0x9e3779b9u,
                                 Vec3{p.x * freq, p.y * freq, p.z * freq});
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    return acc / norm;
}

}  // namespace

const char* medium_kind_name(MediumKind kind) {
    switch (kind) {
        case MediumKind::Cube: return "cube";
        case MediumKind::Slab: return "slab";
        case MediumKind::ProceduralCloud: return "procedural-cloud";
    }
    return "cube";
}

MediumKind medium_kind_from_name(const std::string& name) {
    if (name == "cube") return MediumKind::Cube;
    if (name == "slab") return MediumKind::Slab;
    if (name == "procedural-cloud") return MediumKind::ProceduralCloud;
    fail(Errc::invalid_argument, "unknown medium kind: " + name);
}

DensityGrid generate_medium(MediumKind kind, int dims, uint64_t seed) {
    if (dims < 2 || (dims & (dims - 1)) != 0)
        fail(Errc::bad_dims, "medium dims must be a power of two >= 2");
    double voxel = 2.0 / dims;
    DensityGrid grid(dims, dims, dims, voxel, Vec3{-1.0, -1.0, -1.0});
    int lo = dims / 4, hi = 3 * dims / 4;
    for (int z = 0; z < dims; ++z)
        for (int y = 0; y < dims; ++y)
            for (int x = 0; x < dims; ++x) {
                float d = 0.0f;
                switch (kind) {
                    case MediumKind::Cube:
                        d = (x >= lo && x < hi && y >= lo && y < hi && z >= lo && z < hi)
                                ? 1.0f
                                : 0.0f;
                        break;
                    case MediumKind::Slab:
                        d = (y >= lo && y < hi) ? 1.0f : 0.0f;
                        break;
                    case MediumKind::ProceduralCloud: {
                        // Unit-cube coordinates; noise at base frequency 4
                        // shaped by a radial falloff so the cloud floats
                        // free of the grid boundary.
                        Vec3 u{(x + 0.5) / dims, (y + 0.5) / dims, (z + 0.5) / dims};
                        Vec3 q{2.0 * u.x - 1.0, 2.0 * u.y - 1.0, 2.0 * u.z - 1.0};
                        double falloff = std::clamp(1.3 - 1.5 * length(q), 0.0, 1.0);
                        double noise = fbm(seed, Vec3{u.x * 4.0, u.y * 4.0, u.z * 4.0}, 4);
                        d = float(std::clamp(2.0 * (noise - 0.4) * falloff, 0.0, 1.0));
                        break;
                    }
                }
                grid.set(x, y, z, d);
            }
    grid.validate();
    return grid;
}

}  // namespace scatterfield
