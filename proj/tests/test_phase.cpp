// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "scatterfield/error.h"
#include "scatterfield/phase.h"
#include "scatterfield/quadrature.h"
#include "scatterfield/rng.h"

namespace sf = scatterfield;

// Independent oracle: integrate f over the sphere with a dense
// Gauss-Legendre rule in cos(theta) (the integrand is azimuthally
// symmetric about the reference direction).
static double sphere_integral_oracle(const sf::PhaseModel& m, int nodes = 256) {
    const sf::GaussLegendre& q = sf::gauss_legendre(nodes);
    double acc = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i)
        acc += q.weights[i] * sf::eval_phase(m, q.nodes[i]);
    return 2.0 * sf::kPi * acc;
}

TEST_CASE("hg normalization over the sphere for the acceptance g sweep") {
    for (double g : {-0.9, -0.5, 0.0, 0.5, 0.857, 0.9}) {
        sf::PhaseModel m = g == 0.0 ? sf::PhaseModel::isotropic() : sf::PhaseModel::hg(g);
        // 256 nodes: the HG pole sits just outside [-1,1] for |g| near
        // one, so the default 64-node rule only reaches ~1e-5 there.
        CHECK(sf::sphere_integral(m, 256) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sphere_integral_oracle(m) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("hg mean cosine equals g") {
    for (double g : {-0.9, -0.5, 0.0, 0.5, 0.857, 0.9}) {
        sf::PhaseModel m = sf::PhaseModel::hg(g);
        CHECK(sf::mean_cosine(m, 256) == doctest::Approx(g).epsilon(1e-6));
    }
}

TEST_CASE("multi-lobe presets stay normalized with mean cosine = weighted g") {
    sf::PhaseModel two = sf::PhaseModel::multi_hg({{0.7, 0.6}, {0.3, -0.2}});
    sf::PhaseModel three = sf::PhaseModel::multi_hg({{0.5, 0.8}, {0.3, 0.3}, {0.2, -0.4}});
    CHECK(sf::sphere_integral(two) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sf::sphere_integral(three) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sf::mean_cosine(two) == doctest::Approx(0.7 * 0.6 + 0.3 * -0.2).epsilon(1e-6));
    CHECK(sf::mean_cosine(three) ==
          doctest::Approx(0.5 * 0.8 + 0.3 * 0.3 + 0.2 * -0.4).epsilon(1e-6));
}

TEST_CASE("isotropic phase is 1/4pi everywhere") {
    sf::PhaseModel iso = sf::PhaseModel::isotropic();
    for (double c : {-1.0, -0.3, 0.0, 0.5, 1.0})
        CHECK(sf::eval_phase(iso, c) == doctest::Approx(sf::kInv4Pi).epsilon(1e-12));
}

TEST_CASE("hg closed form at forward/backward directions") {
    // f(g, cos) = (1 - g^2) / (4pi (1 + g^2 - 2 g cos)^{3/2}).
    double g = 0.857;
    double forward = (1 - g * g) / (4 * sf::kPi * std::pow(1 + g * g - 2 * g, 1.5));
    double backward = (1 - g * g) / (4 * sf::kPi * std::pow(1 + g * g + 2 * g, 1.5));
    CHECK(sf::hg_phase(g, 1.0) == doctest::Approx(forward).epsilon(1e-12));
    CHECK(sf::hg_phase(g, -1.0) == doctest::Approx(backward).epsilon(1e-12));
    CHECK(sf::hg_phase(g, 1.0) > sf::hg_phase(g, 0.0));  // forward dominance for g > 0
}

TEST_CASE("material class presets map to the expected lobe counts") {
    CHECK(sf::PhaseModel::for_material(sf::MaterialClass::Air, {}).kind ==
          sf::PhaseKind::Isotropic);
    CHECK(sf::PhaseModel::for_material(sf::MaterialClass::Gas, {0.6}).lobes.size() == 1);
    CHECK(sf::PhaseModel::for_material(sf::MaterialClass::SolidLiquid, {0.6, -0.2})
              .lobes.size() == 2);
    CHECK(sf::PhaseModel::for_material(sf::MaterialClass::Skin, {0.8, 0.3, -0.4})
              .lobes.size() == 3);
    CHECK_THROWS_AS(sf::PhaseModel::for_material(sf::MaterialClass::Skin, {0.8}), sf::Error);
    CHECK_THROWS_AS(sf::PhaseModel::for_material(sf::MaterialClass::Gas, {0.6, 0.1}),
                    sf::Error);
}

TEST_CASE("phase model validation") {
    CHECK_THROWS_AS(sf::PhaseModel::hg(1.0).validate(), sf::Error);
    CHECK_THROWS_AS(sf::PhaseModel::hg(-1.0).validate(), sf::Error);
    CHECK_THROWS_AS(sf::PhaseModel::multi_hg({{0.5, 0.3}, {0.2, 0.1}}).validate(),
                    sf::Error);  // weights sum to 0.7
    CHECK_NOTHROW(sf::PhaseModel::multi_hg({{0.5, 0.3}, {0.5, -0.1}}).validate());
}

TEST_CASE("volume phase: full-sphere cap integrates to 1") {
    sf::SolidAngleCap cap{{0.0, 0.0, 1.0}, sf::kPi};
    for (double g : {0.0, 0.5, 0.857}) {
        sf::PhaseModel m = g == 0.0 ? sf::PhaseModel::isotropic() : sf::PhaseModel::hg(g);
        CHECK(sf::volume_phase(m, {0.0, 0.0, 1.0}, cap, 64) ==
              doctest::Approx(1.0).epsilon(1e-6));
        CHECK(sf::volume_phase(m, {1.0, 0.0, 0.0}, cap, 64) ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("volume phase: isotropic cap equals cap area / 4pi") {
    sf::PhaseModel iso = sf::PhaseModel::isotropic();
    for (double half : {0.1, 0.5, 1.0, 2.0}) {
        sf::SolidAngleCap cap{sf::normalize(sf::Vec3{0.3, -0.5, 0.8}), half};
        double area = 2.0 * sf::kPi * (1.0 - std::cos(half));
        CHECK(sf::volume_phase(iso, {0.0, 1.0, 0.0}, cap) ==
              doctest::Approx(area * sf::kInv4Pi).epsilon(1e-6));
    }
}

TEST_CASE("volume phase: small caps approach f(angle) * cap area") {
    // As the cap shrinks, the integral tends to the integrand at the
    // cap axis times the cap's solid angle.
    sf::PhaseModel m = sf::PhaseModel::hg(0.6);
    sf::Vec3 fixed = sf::normalize(sf::Vec3{1.0, 0.2, 0.1});
    sf::Vec3 axis = sf::normalize(sf::Vec3{0.2, 0.9, -0.3});
    double f_at_axis = sf::eval_phase(m, sf::dot(fixed, axis));
    for (double half : {0.05, 0.02, 0.01}) {
        sf::SolidAngleCap cap{axis, half};
        double area = 2.0 * sf::kPi * (1.0 - std::cos(half));
        double rel = sf::volume_phase(m, fixed, cap) / (f_at_axis * area) - 1.0;
        CHECK(std::abs(rel) < half);  // error shrinks with the aperture
    }
}

TEST_CASE("volume phase matches a Monte Carlo cap oracle") {
    sf::PhaseModel m = sf::PhaseModel::multi_hg({{0.6, 0.7}, {0.4, -0.3}});
    sf::Vec3 fixed = sf::normalize(sf::Vec3{0.5, -0.8, 0.6});
    sf::Pcg32 rng(23, 5);
    for (int trial = 0; trial < 4; ++trial) {
        sf::Vec3 axis = rng.next_unit_vector();
        double half = 0.3 + 0.5 * rng.next_double();
        sf::SolidAngleCap cap{axis, half};
        // Uniform-sphere MC estimate of the cap integral.
        const int n = 400000;
        sf::Pcg32 mc(101 + trial, 3);
        double cos_half = std::cos(half);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            sf::Vec3 d = mc.next_unit_vector();
            if (sf::dot(d, axis) > cos_half) acc += sf::eval_phase(m, sf::dot(fixed, d));
        }
        double mc_estimate = acc / double(n) * 4.0 * sf::kPi;
        CHECK(sf::volume_phase(m, fixed, cap) ==
              doctest::Approx(mc_estimate).epsilon(0.02));
    }
}

TEST_CASE("phase table interpolation converges quadratically to the quadrature") {
    sf::Pcg32 rng(31, 1);
    struct Probe {
        double g, ang, half;
    };
    std::vector<Probe> probes;
    for (int i = 0; i < 200; ++i) {
        double g = -0.9 + 1.8 * rng.next_double();
        double ang = sf::kPi * rng.next_double();
        double half = 0.05 + (sf::kPi - 0.05) * rng.next_double();
        probes.push_back({g, ang, half});
    }
    auto worst_error = [&](int g_res, int angle_res, int aperture_res) {
        sf::PhaseTable table(g_res, angle_res, aperture_res, 16);
        double worst = 0.0;
        for (const Probe& p : probes) {
            sf::PhaseModel m = sf::PhaseModel::hg(p.g);
            sf::Vec3 axis{0.0, 0.0, 1.0};
            sf::Vec3 fixed{std::sin(p.ang), 0.0, std::cos(p.ang)};
            double direct = sf::volume_phase(m, fixed, {axis, p.half}, 16);
            double interp = table.lookup_hg(p.g, p.ang, p.half);
            worst = std::max(worst, std::abs(interp - direct));
        }
        return worst;
    };
    double coarse = worst_error(33, 65, 17);
    double fine = worst_error(65, 129, 33);
    CHECK(coarse < 0.08);
    CHECK(fine < 0.025);
    // Trilinear interpolation: halving the spacing should cut the
    // error by about four; allow headroom for where the worst lands.
    CHECK(fine < 0.5 * coarse);
}

TEST_CASE("phase table lookup composes lobes linearly") {
    sf::PhaseTable table(17, 33, 9, 16);
    sf::PhaseModel two = sf::PhaseModel::multi_hg({{0.6, 0.5}, {0.4, -0.2}});
    sf::Vec3 fixed = sf::normalize(sf::Vec3{0.3, 0.1, 0.9});
    sf::SolidAngleCap cap{sf::normalize(sf::Vec3{-0.2, 0.8, 0.5}), 0.7};
    double ang = sf::angle_between(fixed, cap.axis);
    double expect = 0.6 * table.lookup_hg(0.5, ang, cap.half_angle) +
                    0.4 * table.lookup_hg(-0.2, ang, cap.half_angle);
    CHECK(table.lookup(two, fixed, cap) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("phase table round-trips through from_values") {
    sf::PhaseTable t(9, 17, 5, 8);
    sf::PhaseTable u = sf::PhaseTable::from_values(9, 17, 5, t.values());
    CHECK(u.lookup_hg(0.3, 1.0, 0.5) == t.lookup_hg(0.3, 1.0, 0.5));
    CHECK(u.values() == t.values());
}

TEST_CASE("volume phase is monotone nondecreasing in the half angle") {
    sf::PhaseModel m = sf::PhaseModel::hg(0.7);
    sf::Vec3 fixed = sf::normalize(sf::Vec3{0.4, -0.1, 0.9});
    sf::Vec3 axis = sf::normalize(sf::Vec3{-0.3, 0.7, 0.2});
    double prev = 0.0;
    for (double half = 0.05; half <= sf::kPi + 1e-9; half += 0.05) {
        double v = sf::volume_phase(m, fixed, {axis, half});
        CHECK(v >= prev - 1e-9);
        prev = v;
    }
}

TEST_CASE("isotropic half-sphere cap integrates to one half") {
    sf::PhaseModel iso = sf::PhaseModel::isotropic();
    sf::SolidAngleCap cap{{0.0, 0.0, 1.0}, sf::kPi / 2.0};
    CHECK(sf::volume_phase(iso, {1.0, 0.0, 0.0}, cap) ==
          doctest::Approx(0.5).epsilon(1e-3));
}

// Monte Carlo oracle for the two-factor feature: both caps share the
// axis toward the template point; the factors integrate f against the
// view and light directions respectively.
static double feature_mc_oracle(const sf::PhaseModel& m, const sf::Vec3& omega,
                                const sf::Vec3& light, const sf::Vec3& axis,
                                double half, int n, uint64_t seed) {
    sf::Pcg32 rng(seed, 29);
    double cos_half = std::cos(half);
    double acc_w = 0.0, acc_l = 0.0;
    for (int i = 0; i < n; ++i) {
        sf::Vec3 d = rng.next_unit_vector();
        if (sf::dot(d, axis) <= cos_half) continue;
        acc_w += sf::eval_phase(m, sf::dot(omega, d));
        acc_l += sf::eval_phase(m, sf::dot(light, d));
    }
    double scale = 4.0 * sf::kPi / double(n);
    return (acc_w * scale) * (acc_l * scale);
}

TEST_CASE("phase feature matches the MC cap oracle in the aligned geometry") {
    // Strongly forward HG; template point along the light ray, view
    // opposite the light: forward cap times backward cap.
    sf::PhaseModel m = sf::PhaseModel::hg(0.857);
    sf::Vec3 light = sf::normalize(sf::Vec3{0.0, -1.0, 0.0});
    sf::Vec3 omega = -light;
    sf::Vec3 p{0.0, 0.0, 0.0};
    sf::Vec3 s = p + light * 0.4;  // s - p aligned with the light direction
    double half = 0.5;
    double got = sf::phase_feature(m, omega, light, p, s, half);
    double oracle = feature_mc_oracle(m, omega, light, sf::normalize(s - p), half,
                                      2000000, 7);
    CHECK(got == doctest::Approx(oracle).epsilon(0.01));
}

TEST_CASE("phase feature matches the MC cap oracle for random geometry") {
    sf::PhaseModel m = sf::PhaseModel::multi_hg({{0.6, 0.5}, {0.4, -0.2}});
    sf::Pcg32 rng(43, 11);
    for (int i = 0; i < 3; ++i) {
        sf::Vec3 p = rng.next_unit_vector() * 0.2;
        sf::Vec3 s = p + rng.next_unit_vector() * (0.2 + rng.next_double());
        sf::Vec3 omega = rng.next_unit_vector();
        sf::Vec3 light = rng.next_unit_vector();
        double half = 0.3 + rng.next_double();
        double got = sf::phase_feature(m, omega, light, p, s, half);
        double oracle = feature_mc_oracle(m, omega, light, sf::normalize(s - p), half,
                                          2000000, 100 + uint64_t(i));
        CHECK(got == doctest::Approx(oracle).epsilon(0.02));
    }
}

TEST_CASE("phase feature rejects a template point at the center") {
    sf::PhaseModel m = sf::PhaseModel::hg(0.3);
    CHECK_THROWS_AS(
        sf::phase_feature(m, {0, 0, 1}, {0, -1, 0}, {0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}, 0.3),
        sf::Error);
}

TEST_CASE("phase feature via table matches direct quadrature") {
    sf::PhaseModel m = sf::PhaseModel::multi_hg({{0.7, 0.6}, {0.3, -0.2}});
    sf::PhaseTable table(33, 65, 17, 16);
    sf::Pcg32 rng(41, 2);
    for (int i = 0; i < 50; ++i) {
        sf::Vec3 p = rng.next_unit_vector() * 0.3;
        sf::Vec3 s = p + rng.next_unit_vector() * (0.1 + rng.next_double());
        sf::Vec3 omega = rng.next_unit_vector();
        sf::Vec3 light = rng.next_unit_vector();
        double half = 0.1 + rng.next_double();
        double direct = sf::phase_feature(m, omega, light, p, s, half);
        double tabled = sf::phase_feature(table, m, omega, light, p, s, half);
        CHECK(tabled == doctest::Approx(direct).epsilon(0.05));
    }
}
