// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scatterfield/math.h"

namespace scatterfield {

// Voxel density field. Values live at voxel centers; voxel (0,0,0)'s
// low corner sits at `origin`, so its center is origin + 0.5*voxel_size.
// Densities are extinction densities (1/length before coefficient scale).
class DensityGrid {
  public:
    DensityGrid() = default;
    DensityGrid(int nx, int ny, int nz, double voxel_size, const Vec3& origin);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    double voxel_size() const { return voxel_size_; }
    const Vec3& origin() const { return origin_; }

    float at(int x, int y, int z) const {
        return values_[(size_t(z) * ny_ + y) * nx_ + x];
    }
    void set(int x, int y, int z, float v) {
        values_[(size_t(z) * ny_ + y) * nx_ + x] = v;
    }
    const std::vector<float>& values() const { return values_; }
    std::vector<float>& values() { return values_; }

    Bounds3 bounds() const;
    int max_dim() const { return std::max(nx_, std::max(ny_, nz_)); }

    // Trilinear interpolation of the 8 surrounding voxel centers;
    // clamps to the edge inside the bounding box, returns 0 outside it.
    double sample_trilinear(const Vec3& p) const;

    // Midpoint-rule estimate of the line integral of density from p to q.
    double optical_depth(const Vec3& p, const Vec3& q, double step) const;
    double optical_depth(const Vec3& p, const Vec3& q) const {
        return optical_depth(p, q, 0.5 * voxel_size_);
    }

    // Rejects non-finite or negative densities and non-power-of-two dims.
    void validate() const;

  private:
    int nx_ = 0, ny_ = 0, nz_ = 0;
    double voxel_size_ = 1.0;
    Vec3 origin_{0.0, 0.0, 0.0};
    std::vector<float> values_;
};

// Multiresolution density fields rho_i; level 0 is the input resolution
// and each level halves every axis by 8-child mean pooling down to 1^3.
class DensityPyramid {
  public:
    DensityPyramid() = default;
    explicit DensityPyramid(const DensityGrid& finest);

    int level_count() const { return int(levels_.size()); }
    const DensityGrid& level(int i) const { return levels_.at(size_t(i)); }

  private:
    std::vector<DensityGrid> levels_;
};

enum class MaterialClass { Air, Gas, SolidLiquid, Skin };

// Homogeneous optical properties of the medium occupying a grid: the
// density field modulates a constant extinction scale per RGB channel.
struct MediumProperties {
    Vec3 sigma_t_scale{1.0, 1.0, 1.0};  // mu_t, 1/length per channel
    Vec3 albedo{0.5, 0.5, 0.5};         // eta per channel, each in (0,1)
    MaterialClass material_class = MaterialClass::Gas;

    Vec3 sigma_s() const { return albedo * sigma_t_scale; }
    Vec3 sigma_a() const { return (Vec3{1, 1, 1} - albedo) * sigma_t_scale; }

    // Enforces the per-class albedo ranges (Gas in [0,0.5],
    // SolidLiquid/Skin in [0.5,1]) and positivity of the scales.
    void validate() const;
};

const char* material_class_name(MaterialClass mc);
MaterialClass material_class_from_name(const std::string& name);

// .vgrid binary format: magic "VGRD", version u32, dims 3xu32,
// voxel_size f32, origin 3xf32 (little-endian), then nx*ny*nz f32
// densities in x-fastest order.
DensityGrid load_density(const std::string& path);
void save_density(const DensityGrid& grid, const std::string& path);

DensityPyramid build_pyramid(const DensityGrid& grid);

}  // namespace scatterfield
