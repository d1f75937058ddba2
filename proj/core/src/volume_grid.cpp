// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/volume_grid.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scatterfield/error.h"
#include "wire.h"

namespace scatterfield {

namespace {

constexpr uint32_t kVgridVersion = 1;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

DensityGrid::DensityGrid(int nx, int ny, int nz, double voxel_size,
                         const Vec3& origin)
    : nx_(nx), ny_(ny), nz_(nz), voxel_size_(voxel_size), origin_(origin) {
    if (nx <= 0 || ny <= 0 || nz <= 0)
        fail(Errc::bad_dims, "density grid: dims must be positive");
    if (!(voxel_size > 0.0))
        fail(Errc::bad_value, "density grid: voxel_size must be positive");
    values_.assign(size_t(nx) * ny * nz, 0.0f);
}

Bounds3 DensityGrid::bounds() const {
    Vec3 extent{nx_ * voxel_size_, ny_ * voxel_size_, nz_ * voxel_size_};
    return Bounds3{origin_, origin_ + extent};
}

double DensityGrid::sample_trilinear(const Vec3& p) const {
    Bounds3 b = bounds();
    if (!b.contains(p)) return 0.0;
    // Continuous voxel coordinates with values at centers; clamp the
    // lattice cell so edge voxels extend to the box boundary.
    double fx = (p.x - origin_.x) / voxel_size_ - 0.5;
    double fy = (p.y - origin_.y) / voxel_size_ - 0.5;
    double fz = (p.z - origin_.z) / voxel_size_ - 0.5;
    int x0 = int(std::floor(fx)), y0 = int(std::floor(fy)), z0 = int(std::floor(fz));
    double tx = fx - x0, ty = fy - y0, tz = fz - z0;
    int x1 = std::clamp(x0 + 1, 0, nx_ - 1);
    int y1 = std::clamp(y0 + 1, 0, ny_ - 1);
    int z1 = std::clamp(z0 + 1, 0, nz_ - 1);
    x0 = std::clamp(x0, 0, nx_ - 1);
    y0 = std::clamp(y0, 0, ny_ - 1);
    z0 = std::clamp(z0, 0, nz_ - 1);
    auto lerp1 = [](double a, double b, double t) { return a + t * (b - a); };
    double c00 = lerp1(at(x0, y0, z0), at(x1, y0, z0), tx);
    double c10 = lerp1(at(x0, y1, z0), at(x1, y1, z0), tx);
    double c01 = lerp1(at(x0, y0, z1), at(x1, y0, z1), tx);
    double c11 = lerp1(at(x0, y1, z1), at(x1, y1, z1), tx);
    return lerp1(lerp1(c00, c10, ty), lerp1(c01, c11, ty), tz);
}

double DensityGrid::optical_depth(const Vec3& p, const Vec3& q, double step) const {
    if (!(step > 0.0))
        fail(Errc::invalid_argument, "optical_depth: step must be positive");
    Vec3 d = q - p;
    double len = length(d);
    if (len == 0.0) return 0.0;
    // Midpoint rule with the final partial interval folded into the count.
    int n = std::max(1, int(std::ceil(len / step)));
    double h = len / n;
    Vec3 dir = d * (1.0 / len);
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += sample_trilinear(p + dir * ((i + 0.5) * h));
    return sum * h;
}

void DensityGrid::validate() const {
    if (!is_power_of_two(nx_) || !is_power_of_two(ny_) || !is_power_of_two(nz_))
        fail(Errc::bad_dims, "density grid: dims must be powers of two");
    for (float v : values_) {
        if (!std::isfinite(v))
            fail(Errc::bad_value, "density grid: non-finite density");
        if (v < 0.0f)
            fail(Errc::bad_value, "density grid: negative density");
    }
}

DensityPyramid::DensityPyramid(const DensityGrid& finest) {
    if (!is_power_of_two(finest.nx()) || !is_power_of_two(finest.ny()) ||
        !is_power_of_two(finest.nz()))
        fail(Errc::bad_dims, "pyramid: dims must be powers of two");
    levels_.push_back(finest);
    while (levels_.back().max_dim() > 1) {
        const DensityGrid& src = levels_.back();
        int nx = std::max(1, src.nx() / 2);
        int ny = std::max(1, src.ny() / 2);
        int nz = std::max(1, src.nz() / 2);
        DensityGrid dst(nx, ny, nz, src.voxel_size() * 2.0, src.origin());
        for (int z = 0; z < nz; ++z) {
            for (int y = 0; y < ny; ++y) {
                for (int x = 0; x < nx; ++x) {
                    // Mean over the up-to-8 children; an axis already at 1
                    // voxel contributes its single slab twice via clamping.
                    double sum = 0.0;
                    int count = 0;
                    for (int dz = 0; dz < 2; ++dz) {
                        for (int dy = 0; dy < 2; ++dy) {
                            for (int dx = 0; dx < 2; ++dx) {
                                int sx = std::min(2 * x + dx, src.nx() - 1);
                                int sy = std::min(2 * y + dy, src.ny() - 1);
                                int sz = std::min(2 * z + dz, src.nz() - 1);
                                sum += src.at(sx, sy, sz);
                                ++count;
                            }
                        }
                    }
                    dst.set(x, y, z, float(sum / count));
                }
            }
        }
        levels_.push_back(std::move(dst));
    }
}

DensityPyramid build_pyramid(const DensityGrid& grid) {
    return DensityPyramid(grid);
}

void MediumProperties::validate() const {
    auto in_open = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_open(albedo.x) || !in_open(albedo.y) || !in_open(albedo.z))
        fail(Errc::bad_value, "medium: albedo components must lie in (0,1)");
    double lo = 0.0, hi = 1.0;
    switch (material_class) {
        case MaterialClass::Air:
        case MaterialClass::Gas:
            lo = 0.0, hi = 0.5;
            break;
        case MaterialClass::SolidLiquid:
        case MaterialClass::Skin:
            lo = 0.5, hi = 1.0;
            break;
    }
    for (double a : {albedo.x, albedo.y, albedo.z}) {
        if (a < lo || a > hi)
            fail(Errc::bad_value, "medium: albedo outside the material class range");
    }
    for (double s : {sigma_t_scale.x, sigma_t_scale.y, sigma_t_scale.z}) {
        if (!(s > 0.0) || !std::isfinite(s))
            fail(Errc::bad_value, "medium: sigma_t scale must be positive");
    }
}

const char* material_class_name(MaterialClass mc) {
    switch (mc) {
        case MaterialClass::Air: return "air";
        case MaterialClass::Gas: return "gas";
        case MaterialClass::SolidLiquid: return "solid_liquid";
        case MaterialClass::Skin: return "skin";
    }
    return "gas";
}

MaterialClass material_class_from_name(const std::string& name) {
    if (name == "air") return MaterialClass::Air;
    if (name == "gas") return MaterialClass::Gas;
    if (name == "solid_liquid") return MaterialClass::SolidLiquid;
    if (name == "skin") return MaterialClass::Skin;
    fail(Errc::invalid_argument, "unknown material class '" + name + "'");
}

DensityGrid load_density(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "load_density: cannot open '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VGRD", 4) != 0)
        fail(Errc::malformed_header, "load_density: bad magic in '" + path + "'");
    uint32_t version = wire::read_u32(in);
    if (!in || version != kVgridVersion)
        fail(Errc::malformed_header, "load_density: unsupported version");
    uint32_t dims[3];
    for (uint32_t& d : dims) d = wire::read_u32(in);
    float voxel_size = wire::read_f32(in);
    Vec3 origin;
    origin.x = wire::read_f32(in);
    origin.y = wire::read_f32(in);
    origin.z = wire::read_f32(in);
    if (!in) fail(Errc::malformed_header, "load_density: truncated header");
    for (uint32_t d : dims) {
        if (d == 0 || d > (1u << 16) || !is_power_of_two(int(d)))
            fail(Errc::bad_dims, "load_density: dims must be powers of two");
    }
    if (!(voxel_size > 0.0f) || !std::isfinite(voxel_size))
        fail(Errc::bad_value, "load_density: voxel_size must be positive");
    DensityGrid grid(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                     static_cast<int>(dims[2]), voxel_size, origin);
    size_t count = grid.values().size();
    in.read(reinterpret_cast<char*>(grid.values().data()),
            std::streamsize(count * sizeof(float)));
    if (size_t(in.gcount()) != count * sizeof(float))
        fail(Errc::truncated, "load_density: truncated payload in '" + path + "'");
    if constexpr (std::endian::native == std::endian::big) {
        for (float& v : grid.values()) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            bits = __builtin_bswap32(bits);
            std::memcpy(&v, &bits, 4);
        }
    }
    for (float v : grid.values()) {
        if (!std::isfinite(v))
            fail(Errc::bad_value, "load_density: non-finite density");
        if (v < 0.0f)
            fail(Errc::bad_value, "load_density: negative density");
    }
    return grid;
}

void save_density(const DensityGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "save_density: cannot open '" + path + "'");
    out.write("VGRD", 4);
    wire::write_u32(out, kVgridVersion);
    wire::write_u32(out, uint32_t(grid.nx()));
    wire::write_u32(out, uint32_t(grid.ny()));
    wire::write_u32(out, uint32_t(grid.nz()));
    wire::write_f32(out, float(grid.voxel_size()));
    wire::write_f32(out, float(grid.origin().x));
    wire::write_f32(out, float(grid.origin().y));
    wire::write_f32(out, float(grid.origin().z));
    for (float v : grid.values()) wire::write_f32(out, v);
    if (!out) fail(Errc::io, "save_density: write error on '" + path + "'");
}

}  // namespace scatterfield
