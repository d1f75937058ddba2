// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/phase.h"

#include <algorithm>
#include <cmath>

#include "scatterfield/error.h"
#include "scatterfield/quadrature.h"

namespace scatterfield {

PhaseModel PhaseModel::isotropic() {
    PhaseModel m;
    m.kind = PhaseKind::Isotropic;
    m.lobes = {{1.0, 0.0}};
    return m;
}

PhaseModel PhaseModel::hg(double g) {
    PhaseModel m;
    m.kind = PhaseKind::HG;
    m.lobes = {{1.0, g}};
    m.validate();
    return m;
}

PhaseModel PhaseModel::multi_hg(const std::vector<PhaseLobe>& lobes) {
    PhaseModel m;
    m.kind = PhaseKind::MultiHG;
    m.lobes = lobes;
    m.validate();
    return m;
}

PhaseModel PhaseModel::for_material(MaterialClass mc, const std::vector<double>& gs,
                                    const std::vector<double>& weights) {
    size_t need = 0;
    switch (mc) {
        case MaterialClass::Air: need = 0; break;
        case MaterialClass::Gas: need = 1; break;
        case MaterialClass::SolidLiquid: need = 2; break;
        case MaterialClass::Skin: need = 3; break;
    }
    if (mc == MaterialClass::Air) return isotropic();
    if (gs.size() != need)
        fail(Errc::invalid_argument, "phase: lobe count does not match material class");
    if (need == 1) return hg(gs[0]);
    std::vector<PhaseLobe> lobes(need);
    for (size_t k = 0; k < need; ++k) {
        lobes[k].g = gs[k];
        lobes[k].weight = weights.empty() ? 1.0 / double(need) : weights.at(k);
    }
    return multi_hg(lobes);
}

void PhaseModel::validate() const {
    if (lobes.empty()) fail(Errc::bad_value, "phase: model has no lobes");
    double sum = 0.0;
    for (const PhaseLobe& lobe : lobes) {
        if (!(lobe.weight >= 0.0))
            fail(Errc::bad_value, "phase: lobe weight must be nonnegative");
        if (!(lobe.g > -1.0 && lobe.g < 1.0))
            fail(Errc::bad_value, "phase: asymmetry must lie in (-1, 1)");
        sum += lobe.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        fail(Errc::bad_value, "phase: lobe weights must sum to 1");
}

double PhaseModel::max_abs_g() const {
    double m = 0.0;
    for (const PhaseLobe& lobe : lobes) m = std::max(m, std::abs(lobe.g));
    return kind == PhaseKind::Isotropic ? 0.0 : m;
}

double hg_phase(double g, double cos_theta) {
    double denom = 1.0 + g * g - 2.0 * g * cos_theta;
    denom = std::max(denom, 1e-12);
    return kInv4Pi * (1.0 - g * g) / (denom * std::sqrt(denom));
}

namespace {

// Lobe sum without re-validating; callers validate once up front.
double eval_unchecked(const PhaseModel& model, double cos_theta) {
    if (model.kind == PhaseKind::Isotropic) return kInv4Pi;
    double v = 0.0;
    for (const PhaseLobe& lobe : model.lobes)
        v += lobe.weight * hg_phase(lobe.g, cos_theta);
    return v;
}

}  // namespace

double eval_phase(const PhaseModel& model, double cos_theta) {
    model.validate();
    return eval_unchecked(model, clamp(cos_theta, -1.0, 1.0));
}

double sphere_integral(const PhaseModel& model, int nodes) {
    const GaussLegendre& gl = gauss_legendre(nodes);
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i)
        sum += gl.weights[i] * eval_phase(model, gl.nodes[i]);
    return 2.0 * kPi * sum;
}

double mean_cosine(const PhaseModel& model, int nodes) {
    if (nodes < 16) fail(Errc::invalid_argument, "mean_cosine: nodes must be >= 16");
    const GaussLegendre& gl = gauss_legendre(nodes);
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i)
        sum += gl.weights[i] * gl.nodes[i] * eval_phase(model, gl.nodes[i]);
    return 2.0 * kPi * sum;
}

namespace {

// Cap integral reduced to (cos of fixed_dir-to-axis angle, aperture):
// with mu' the polar cosine about the axis and psi the azimuth,
// cos(gamma) = c_f mu' + sqrt(1-c_f^2) sqrt(1-mu'^2) cos(psi).
double cap_integral(const PhaseModel& model, double cos_fixed, double half_angle,
                    int nodes) {
    double mu_lo = std::cos(std::min(half_angle, kPi));
    const GaussLegendre& gl = gauss_legendre(nodes);
    int n_psi = 2 * nodes;
    double s_f = std::sqrt(std::max(0.0, 1.0 - cos_fixed * cos_fixed));
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
        // Map the [-1,1] Gauss nodes onto [mu_lo, 1].
        double mu = 0.5 * (1.0 + mu_lo) + 0.5 * (1.0 - mu_lo) * gl.nodes[i];
        double w_mu = 0.5 * (1.0 - mu_lo) * gl.weights[i];
        double s_mu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        double inner = 0.0;
        for (int j = 0; j < n_psi; ++j) {
            double psi = 2.0 * kPi * (j + 0.5) / n_psi;
            double cg = clamp(cos_fixed * mu + s_f * s_mu * std::cos(psi), -1.0, 1.0);
            inner += eval_unchecked(model, cg);
        }
        sum += w_mu * inner * (2.0 * kPi / n_psi);
    }
    return sum;
}

}  // namespace

double volume_phase(const PhaseModel& model, const Vec3& fixed_dir,
                    const SolidAngleCap& cap, int nodes) {
    if (!(cap.half_angle > 0.0))
        fail(Errc::invalid_argument, "volume_phase: degenerate cap");
    if (nodes < 8) fail(Errc::invalid_argument, "volume_phase: nodes must be >= 8");
    model.validate();
    double cos_fixed = clamp(dot(fixed_dir, cap.axis), -1.0, 1.0);
    return cap_integral(model, cos_fixed, cap.half_angle, nodes);
}

PhaseTable::PhaseTable(int g_res, int angle_res, int aperture_res, int quad_nodes)
    : g_res_(g_res), angle_res_(angle_res), aperture_res_(aperture_res) {
    if (g_res < 2 || angle_res < 2 || aperture_res < 2)
        fail(Errc::invalid_argument, "phase table: resolutions must be >= 2");
    values_.resize(size_t(g_res) * angle_res * aperture_res);
    for (int gi = 0; gi < g_res; ++gi) {
        double g = -0.99 + 1.98 * gi / double(g_res - 1);
        PhaseModel m = PhaseModel::hg(g);
        for (int ai = 0; ai < angle_res; ++ai) {
            double angle = kPi * ai / double(angle_res - 1);
            double cf = std::cos(angle);
            for (int hi = 0; hi < aperture_res; ++hi) {
                double half = kPi * hi / double(aperture_res - 1);
                double v = half > 0.0 ? cap_integral(m, cf, half, quad_nodes) : 0.0;
                values_[(size_t(gi) * angle_res + ai) * aperture_res + hi] = float(v);
            }
        }
    }
}

PhaseTable PhaseTable::from_values(int g_res, int angle_res, int aperture_res,
                                   std::vector<float> values) {
    if (values.size() != size_t(g_res) * angle_res * aperture_res)
        fail(Errc::shape_mismatch, "phase table: value count mismatch");
    PhaseTable t;
    t.g_res_ = g_res;
    t.angle_res_ = angle_res;
    t.aperture_res_ = aperture_res;
    t.values_ = std::move(values);
    return t;
}

double PhaseTable::lookup_hg(double g, double angle, double half_angle) const {
    if (values_.empty()) fail(Errc::invalid_argument, "phase table: empty");
    auto grid = [](double v, double lo, double hi, int res, int& i0, double& t) {
        double u = (clamp(v, lo, hi) - lo) / (hi - lo) * (res - 1);
        i0 = std::min(int(u), res - 2);
        t = u - i0;
    };
    int gi;
    double gt;
    grid(g, -0.99, 0.99, g_res_, gi, gt);
    int ai;
    double at_;
    grid(angle, 0.0, kPi, angle_res_, ai, at_);
    int hi;
    double ht;
    grid(half_angle, 0.0, kPi, aperture_res_, hi, ht);
    double v = 0.0;
    for (int dg = 0; dg < 2; ++dg) {
        double wg = dg ? gt : 1.0 - gt;
        for (int da = 0; da < 2; ++da) {
            double wa = da ? at_ : 1.0 - at_;
            for (int dh = 0; dh < 2; ++dh) {
                double wh = dh ? ht : 1.0 - ht;
                v += wg * wa * wh * at(gi + dg, ai + da, hi + dh);
            }
        }
    }
    return v;
}

double PhaseTable::lookup(const PhaseModel& model, const Vec3& fixed_dir,
                          const SolidAngleCap& cap) const {
    double angle = angle_between(fixed_dir, cap.axis);
    if (model.kind == PhaseKind::Isotropic)
        return lookup_hg(0.0, angle, cap.half_angle);
    double v = 0.0;
    for (const PhaseLobe& lobe : model.lobes)
        v += lobe.weight * lookup_hg(lobe.g, angle, cap.half_angle);
    return v;
}

double phase_feature(const PhaseModel& model, const Vec3& omega, const Vec3& light,
                     const Vec3& p, const Vec3& s_i, double cap_half_angle,
                     int nodes) {
    Vec3 d = s_i - p;
    double len = length(d);
    if (len <= 0.0)
        fail(Errc::invalid_argument, "phase_feature: template point coincides with p");
    SolidAngleCap cap{d * (1.0 / len), cap_half_angle};
    return volume_phase(model, omega, cap, nodes) *
           volume_phase(model, light, cap, nodes);
}

double phase_feature(const PhaseTable& table, const PhaseModel& model,
                     const Vec3& omega, const Vec3& light, const Vec3& p,
                     const Vec3& s_i, double cap_half_angle) {
    Vec3 d = s_i - p;
    double len = length(d);
    if (len <= 0.0)
        fail(Errc::invalid_argument, "phase_feature: template point coincides with p");
    SolidAngleCap cap{d * (1.0 / len), cap_half_angle};
    return table.lookup(model, omega, cap) * table.lookup(model, light, cap);
}

}  // namespace scatterfield
