// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "scatterfield/math.h"
#include "scatterfield/volume_grid.h"

namespace scatterfield {

enum class PhaseKind { Isotropic, HG, MultiHG };

struct PhaseLobe {
    double weight = 1.0;  // lambda_k, >= 0, weights sum to 1
    double g = 0.0;       // asymmetry, in (-1, 1)
};

// Isotropic / Henyey-Greenstein / multi-lobe HG phase function.
// cos_theta = 1 means scattering straight ahead (forward continuation
// of travel); g > 0 is predominantly forward scattering.
struct PhaseModel {
    PhaseKind kind = PhaseKind::Isotropic;
    std::vector<PhaseLobe> lobes;

    static PhaseModel isotropic();
    static PhaseModel hg(double g);
    static PhaseModel multi_hg(const std::vector<PhaseLobe>& lobes);

    // Material classes map to lobe counts: Air isotropic, Gas one HG
    // lobe, SolidLiquid two, Skin three. g values are configuration.
    static PhaseModel for_material(MaterialClass mc, const std::vector<double>& gs,
                                   const std::vector<double>& weights = {});

    // Checks lobe weights sum to 1 (1e-9) and each g lies in (-1, 1).
    void validate() const;

    // Largest |g| among lobes; 0 for isotropic.
    double max_abs_g() const;
};

// Henyey-Greenstein density per steradian.
double hg_phase(double g, double cos_theta);

// Phase density per steradian at the given scattering cosine.
double eval_phase(const PhaseModel& model, double cos_theta);

// Integral of the phase function over the full sphere, Gauss-Legendre
// in cos(theta); equals 1 for a normalized model.
double sphere_integral(const PhaseModel& model, int nodes = 64);

// Mean scattering cosine; equals g for a single HG lobe.
double mean_cosine(const PhaseModel& model, int nodes = 64);

// Cone of directions {phi : dot(axis, phi) > cos(half_angle)}.
struct SolidAngleCap {
    Vec3 axis;           // unit
    double half_angle;   // radians, in (0, pi]
};

// Volume phase f*: the phase function integrated over the cap,
// f*(fixed_dir, cap) = int_cap f(angle(fixed_dir, phi)) dphi.
// Quadrature is Gauss-Legendre in the polar cosine crossed with
// equal-weight azimuthal midpoints (2*nodes of them).
double volume_phase(const PhaseModel& model, const Vec3& fixed_dir,
                    const SolidAngleCap& cap, int nodes = 16);

// The cap integral depends only on (g, angle(fixed_dir, axis),
// half_angle), so single-lobe values are tabulated on a regular grid
// and combined linearly per lobe at lookup time.
class PhaseTable {
  public:
    PhaseTable() = default;
    PhaseTable(int g_res, int angle_res, int aperture_res, int quad_nodes = 16);

    // Trilinear interpolation; inputs clamp to the table domain
    // g in [-0.99, 0.99], angle in [0, pi], half_angle in [0, pi].
    double lookup_hg(double g, double angle, double half_angle) const;
    double lookup(const PhaseModel& model, const Vec3& fixed_dir,
                  const SolidAngleCap& cap) const;

    int g_res() const { return g_res_; }
    int angle_res() const { return angle_res_; }
    int aperture_res() const { return aperture_res_; }
    const std::vector<float>& values() const { return values_; }

    // Reconstructs a table from serialized dims + values (see .vfeat).
    static PhaseTable from_values(int g_res, int angle_res, int aperture_res,
                                  std::vector<float> values);

  private:
    double at(int gi, int ai, int hi) const {
        return values_[(size_t(gi) * angle_res_ + ai) * aperture_res_ + hi];
    }

    int g_res_ = 0, angle_res_ = 0, aperture_res_ = 0;
    std::vector<float> values_;  // [g][angle][aperture]
};

// Phase feature of one template point s_i seen from p (Eq. 8 geometry):
// the product f*(omega, s_i - p) * f*(s_i - p, light), both caps with
// axis along s_i - p and the layer's subtended aperture.
double phase_feature(const PhaseModel& model, const Vec3& omega, const Vec3& light,
                     const Vec3& p, const Vec3& s_i, double cap_half_angle,
                     int nodes = 16);
double phase_feature(const PhaseTable& table, const PhaseModel& model,
                     const Vec3& omega, const Vec3& light, const Vec3& p,
                     const Vec3& s_i, double cap_half_angle);

}  // namespace scatterfield
