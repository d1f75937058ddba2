// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "scatterfield/digest.h"
#include "scatterfield/error.h"
#include "scatterfield/rng.h"
#include "scatterfield/scene_gen.h"
#include "scatterfield/volume_grid.h"

namespace sf = scatterfield;

static std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

static sf::DensityGrid make_grid(int n, double voxel, const sf::Vec3& origin) {
    return sf::DensityGrid(n, n, n, voxel, origin);
}

TEST_CASE("grid geometry: bounds and voxel centers") {
    sf::DensityGrid g = make_grid(4, 0.5, {-1.0, -1.0, -1.0});
    sf::Bounds3 b = g.bounds();
    CHECK(b.lo == sf::Vec3{-1.0, -1.0, -1.0});
    CHECK(b.hi == sf::Vec3{1.0, 1.0, 1.0});
    CHECK(g.max_dim() == 4);
}

TEST_CASE("trilinear interpolation matches an affine field exactly") {
    // A trilinear interpolant reproduces any affine function of position
    // at points whose stencil does not clamp at the boundary.
    const int n = 8;
    sf::DensityGrid g = make_grid(n, 0.25, {0.0, 0.0, 0.0});
    auto affine = [](const sf::Vec3& p) { return 0.3 + 0.7 * p.x - 0.2 * p.y + 0.5 * p.z; };
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                sf::Vec3 c{(x + 0.5) * 0.25, (y + 0.5) * 0.25, (z + 0.5) * 0.25};
                g.set(x, y, z, float(affine(c)));
            }
    sf::Pcg32 rng(13, 1);
    for (int i = 0; i < 500; ++i) {
        // Stay one voxel away from the faces so no clamping occurs.
        sf::Vec3 p{0.375 + rng.next_double() * 1.25, 0.375 + rng.next_double() * 1.25,
                   0.375 + rng.next_double() * 1.25};
        CHECK(g.sample_trilinear(p) == doctest::Approx(affine(p)).epsilon(1e-5));
    }
}

TEST_CASE("trilinear interpolation: outside bounds is zero, at centers exact") {
    sf::DensityGrid g = make_grid(2, 1.0, {0.0, 0.0, 0.0});
    g.set(0, 0, 0, 3.0f);
    g.set(1, 1, 1, 5.0f);
    CHECK(g.sample_trilinear({-0.1, 0.5, 0.5}) == 0.0);
    CHECK(g.sample_trilinear({2.1, 0.5, 0.5}) == 0.0);
    CHECK(g.sample_trilinear({0.5, 0.5, 0.5}) == doctest::Approx(3.0));
    CHECK(g.sample_trilinear({1.5, 1.5, 1.5}) == doctest::Approx(5.0));
}

TEST_CASE("optical depth of a homogeneous grid matches rho * distance") {
    const int n = 16;
    sf::DensityGrid g = make_grid(n, 2.0 / n, {-1.0, -1.0, -1.0});
    for (float& v : g.values()) v = 1.7f;
    sf::Pcg32 rng(19, 3);
    for (int i = 0; i < 50; ++i) {
        // Segment endpoints inside the interior region where trilinear
        // clamping cannot reduce the sampled density.
        sf::Vec3 p{rng.next_double() - 0.5, rng.next_double() - 0.5, rng.next_double() - 0.5};
        sf::Vec3 q{rng.next_double() - 0.5, rng.next_double() - 0.5, rng.next_double() - 0.5};
        double d = sf::length(q - p);
        if (d < 1e-6) continue;
        double tau = g.optical_depth(p, q, g.voxel_size() / 4.0);
        CHECK(tau == doctest::Approx(1.7 * d).epsilon(1e-3));
    }
}

TEST_CASE("optical depth is symmetric and additive along a segment") {
    sf::DensityGrid g = sf::generate_medium(sf::MediumKind::ProceduralCloud, 16, 5);
    sf::Vec3 a{-0.4, -0.2, -0.3}, b{0.5, 0.3, 0.4};
    sf::Vec3 mid = sf::lerp(a, b, 0.5);
    double step = g.voxel_size() / 8.0;
    double whole = g.optical_depth(a, b, step);
    double halves = g.optical_depth(a, mid, step) + g.optical_depth(mid, b, step);
    CHECK(whole == doctest::Approx(g.optical_depth(b, a, step)).epsilon(1e-9));
    CHECK(whole == doctest::Approx(halves).epsilon(2e-3));
}

TEST_CASE("pyramid: level count, dims, and 8-child mean pooling") {
    const int n = 16;
    sf::DensityGrid g = make_grid(n, 0.125, {-1.0, -1.0, -1.0});
    sf::Pcg32 rng(7, 1);
    for (float& v : g.values()) v = rng.next_float();
    sf::DensityPyramid pyr(g);
    REQUIRE(pyr.level_count() == 5);  // 16 -> 8 -> 4 -> 2 -> 1

    for (int level = 1; level < pyr.level_count(); ++level) {
        const sf::DensityGrid& fine = pyr.level(level - 1);
        const sf::DensityGrid& coarse = pyr.level(level);
        REQUIRE(coarse.nx() == fine.nx() / 2);
        CHECK(coarse.voxel_size() == doctest::Approx(2.0 * fine.voxel_size()));
        for (int z = 0; z < coarse.nz(); ++z)
            for (int y = 0; y < coarse.ny(); ++y)
                for (int x = 0; x < coarse.nx(); ++x) {
                    double sum = 0.0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                sum += fine.at(2 * x + dx, 2 * y + dy, 2 * z + dz);
                    CHECK(coarse.at(x, y, z) == doctest::Approx(sum / 8.0).epsilon(1e-6));
                }
    }
    // Top level is the global mean.
    double mean = 0.0;
    for (float v : g.values()) mean += v;
    mean /= double(g.values().size());
    CHECK(pyr.level(4).at(0, 0, 0) == doctest::Approx(mean).epsilon(1e-5));

    // Mean pooling preserves the grid total mass per level.
    CHECK(sf::build_pyramid(g).level_count() == pyr.level_count());
}

TEST_CASE("pyramid preserves bounds at every level") {
    sf::DensityGrid g = make_grid(8, 0.25, {-1.0, -1.0, -1.0});
    sf::DensityPyramid pyr(g);
    for (int i = 0; i < pyr.level_count(); ++i) {
        sf::Bounds3 b = pyr.level(i).bounds();
        CHECK(b.lo.x == doctest::Approx(-1.0));
        CHECK(b.hi.x == doctest::Approx(1.0));
    }
}

TEST_CASE("validate rejects bad grids") {
    CHECK_THROWS_AS(make_grid(0, 1.0, {0, 0, 0}).validate(), sf::Error);
    CHECK_THROWS_AS(make_grid(3, 1.0, {0, 0, 0}).validate(), sf::Error);  // not power of two
    sf::DensityGrid g = make_grid(4, 1.0, {0, 0, 0});
    g.set(1, 2, 3, -0.5f);
    CHECK_THROWS_AS(g.validate(), sf::Error);
    g.set(1, 2, 3, std::numeric_limits<float>::quiet_NaN());
    CHECK_THROWS_AS(g.validate(), sf::Error);
    g.set(1, 2, 3, 0.5f);
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("medium properties enforce per-class albedo ranges") {
    sf::MediumProperties p;
    p.sigma_t_scale = {4.0, 4.0, 4.0};

    p.material_class = sf::MaterialClass::Gas;
    p.albedo = {0.3, 0.4, 0.2};
    CHECK_NOTHROW(p.validate());
    p.albedo = {0.7, 0.4, 0.2};  // above the gas/air ceiling
    CHECK_THROWS_AS(p.validate(), sf::Error);

    p.material_class = sf::MaterialClass::SolidLiquid;
    p.albedo = {0.7, 0.8, 0.9};
    CHECK_NOTHROW(p.validate());
    p.albedo = {0.3, 0.8, 0.9};  // below the solid/skin floor
    CHECK_THROWS_AS(p.validate(), sf::Error);

    // Albedo of exactly 0 or 1 is outside the open interval.
    p.albedo = {1.0, 0.8, 0.9};
    CHECK_THROWS_AS(p.validate(), sf::Error);
    p.material_class = sf::MaterialClass::Gas;
    p.albedo = {0.0, 0.3, 0.3};
    CHECK_THROWS_AS(p.validate(), sf::Error);

    p.albedo = {0.3, 0.3, 0.3};
    p.sigma_t_scale = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(p.validate(), sf::Error);
}

TEST_CASE("sigma_s and sigma_a partition sigma_t") {
    sf::MediumProperties p;
    p.sigma_t_scale = {8.0, 6.0, 4.0};
    p.albedo = {0.9, 0.8, 0.7};
    sf::Vec3 total = p.sigma_s() + p.sigma_a();
    CHECK(total.x == doctest::Approx(8.0));
    CHECK(total.y == doctest::Approx(6.0));
    CHECK(total.z == doctest::Approx(4.0));
}

TEST_CASE("material class names round-trip") {
    for (sf::MaterialClass mc : {sf::MaterialClass::Air, sf::MaterialClass::Gas,
                                 sf::MaterialClass::SolidLiquid, sf::MaterialClass::Skin})
        CHECK(sf::material_class_from_name(sf::material_class_name(mc)) == mc);
    CHECK_THROWS_AS(sf::material_class_from_name("plasma"), sf::Error);
}

TEST_CASE("vgrid io round-trips bit-exactly and deterministically") {
    sf::DensityGrid g = sf::generate_medium(sf::MediumKind::ProceduralCloud, 16, 9);
    std::string p1 = temp_path("sf_grid_a.vgrid");
    std::string p2 = temp_path("sf_grid_b.vgrid");
    sf::save_density(g, p1);
    sf::save_density(g, p2);
    CHECK(sf::sha256_file_hex(p1) == sf::sha256_file_hex(p2));

    sf::DensityGrid back = sf::load_density(p1);
    REQUIRE(back.nx() == g.nx());
    REQUIRE(back.values().size() == g.values().size());
    CHECK(back.voxel_size() == doctest::Approx(g.voxel_size()));
    bool same = true;
    for (size_t i = 0; i < g.values().size(); ++i) same = same && g.values()[i] == back.values()[i];
    CHECK(same);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("vgrid io rejects corrupt containers") {
    std::string path = temp_path("sf_grid_corrupt.vgrid");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE this is not a grid";
    }
    CHECK_THROWS_AS(sf::load_density(path), sf::Error);

    // Truncated payload: valid header, too little data.
    sf::DensityGrid g = make_grid(4, 1.0, {0, 0, 0});
    sf::save_density(g, path);
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 16);
    CHECK_THROWS_AS(sf::load_density(path), sf::Error);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(sf::load_density(path), sf::Error);
}

TEST_CASE("procedural media: shapes, determinism, and occupancy") {
    sf::DensityGrid cube = sf::generate_medium(sf::MediumKind::Cube, 8, 1);
    int occupied = 0;
    for (float v : cube.values()) occupied += v > 0.0f ? 1 : 0;
    CHECK(occupied == 4 * 4 * 4);

    sf::DensityGrid slab = sf::generate_medium(sf::MediumKind::Slab, 8, 1);
    occupied = 0;
    for (float v : slab.values()) occupied += v > 0.0f ? 1 : 0;
    CHECK(occupied == 8 * 4 * 8);

    sf::DensityGrid c1 = sf::generate_medium(sf::MediumKind::ProceduralCloud, 16, 3);
    sf::DensityGrid c2 = sf::generate_medium(sf::MediumKind::ProceduralCloud, 16, 3);
    sf::DensityGrid c3 = sf::generate_medium(sf::MediumKind::ProceduralCloud, 16, 4);
    bool same = true, diff = false;
    for (size_t i = 0; i < c1.values().size(); ++i) {
        same = same && c1.values()[i] == c2.values()[i];
        diff = diff || c1.values()[i] != c3.values()[i];
    }
    CHECK(same);
    CHECK(diff);

    int nonzero = 0;
    for (float v : c1.values()) nonzero += v > 0.0f ? 1 : 0;
    double frac = double(nonzero) / double(c1.values().size());
    CHECK(frac > 0.05);
    CHECK(frac < 0.95);
    CHECK_NOTHROW(c1.validate());

    CHECK_THROWS_AS(sf::generate_medium(sf::MediumKind::Cube, 7, 1), sf::Error);
    CHECK_THROWS_AS(sf::generate_medium(sf::MediumKind::Cube, 0, 1), sf::Error);
}

TEST_CASE("medium kind names round-trip") {
    for (sf::MediumKind k : {sf::MediumKind::Cube, sf::MediumKind::Slab,
                             sf::MediumKind::ProceduralCloud})
        CHECK(sf::medium_kind_from_name(sf::medium_kind_name(k)) == k);
    CHECK_THROWS_AS(sf::medium_kind_from_name("torus"), sf::Error);
}
