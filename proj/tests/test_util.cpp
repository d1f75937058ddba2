// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "scatterfield/digest.h"
#include "scatterfield/image.h"
#include "scatterfield/math.h"
#include "scatterfield/parallel.h"
#include "scatterfield/quadrature.h"
#include "scatterfield/rng.h"

namespace sf = scatterfield;

static std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TEST_CASE("splitmix64 reference values") {
    // Published test vector: three successive outputs from seed 1234567.
    uint64_t s = 1234567;
    CHECK(sf::splitmix64(s) == 6457827717110365317ULL);
    CHECK(sf::splitmix64(s + 0x9e3779b97f4a7c15ULL) == 3203168211198807973ULL);
    CHECK(sf::splitmix64(s + 2 * 0x9e3779b97f4a7c15ULL) == 9817491932198370423ULL);
}

TEST_CASE("pcg32 determinism and stream independence") {
    sf::Pcg32 a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        uint32_t va = a.next_u32();
        all_equal = all_equal && (va == b.next_u32());
        any_diff = any_diff || (va != c.next_u32());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("pcg32 uniformity of next_double and next_below") {
    sf::Pcg32 rng(3, 1);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.02));

    std::vector<int> buckets(10, 0);
    for (int i = 0; i < 100000; ++i) buckets[rng.next_below(10)]++;
    for (int b : buckets) CHECK(std::abs(b - 10000) < 500);
}

TEST_CASE("pcg32 unit vectors average to zero and unit length") {
    sf::Pcg32 rng(11, 2);
    sf::Vec3 mean{0, 0, 0};
    for (int i = 0; i < 50000; ++i) {
        sf::Vec3 v = rng.next_unit_vector();
        CHECK(sf::length(v) == doctest::Approx(1.0).epsilon(1e-12));
        mean += v;
    }
    mean *= 1.0 / 50000.0;
    CHECK(sf::length(mean) < 0.02);
}

TEST_CASE("sha256 known vectors") {
    // FIPS 180-2 test vectors.
    CHECK(sf::sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sf::sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sf::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256_file_hex equals in-memory digest") {
    std::string path = temp_path("sf_digest_test.bin");
    std::string payload = "scatterfield digest payload\n";
    payload.push_back('\0');  // binary content must survive the file round-trip
    payload.push_back('\x01');
    payload += "tail";
    {
        std::ofstream out(path, std::ios::binary);
        out.write(payload.data(), std::streamsize(payload.size()));
    }
    CHECK(sf::sha256_file_hex(path) == sf::sha256_hex(payload));
    std::filesystem::remove(path);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    // An n-point rule is exact through degree 2n-1.
    for (int n : {2, 4, 8, 16, 64}) {
        const sf::GaussLegendre& q = sf::gauss_legendre(n);
        REQUIRE(int(q.nodes.size()) == n);
        double w_sum = 0.0;
        for (double w : q.weights) w_sum += w;
        CHECK(w_sum == doctest::Approx(2.0).epsilon(1e-14));

        // int_{-1}^{1} x^k dx = 2/(k+1) for even k, 0 for odd.
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += q.weights[i] * std::pow(q.nodes[i], k);
            double expected = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
            CHECK(acc == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("gauss-legendre converges on a transcendental integrand") {
    // int_{-1}^{1} e^x dx = e - 1/e.
    const sf::GaussLegendre& q = sf::gauss_legendre(16);
    double acc = 0.0;
    for (size_t i = 0; i < q.nodes.size(); ++i) acc += q.weights[i] * std::exp(q.nodes[i]);
    CHECK(acc == doctest::Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("pfm round-trip is bit exact") {
    sf::ImageF img(7, 5);
    sf::Pcg32 rng(77, 1);
    for (float& v : img.rgb) v = rng.next_float() * 10.0f - 2.0f;
    std::string path = temp_path("sf_image_test.pfm");
    sf::write_pfm(img, path);
    sf::ImageF back = sf::read_pfm(path);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.rgb.size() == img.rgb.size());
    for (size_t i = 0; i < img.rgb.size(); ++i) CHECK(back.rgb[i] == img.rgb[i]);
    std::filesystem::remove(path);
}

TEST_CASE("ppm preview has a valid P6 header and clamps") {
    sf::ImageF img(3, 2);
    img.pixel(0, 0)[0] = 2.5f;   // clamps to 255
    img.pixel(1, 0)[1] = -1.0f;  // clamps to 0
    img.pixel(2, 1)[2] = 1.0f;
    std::string path = temp_path("sf_image_test.ppm");
    sf::write_ppm(img, path);
    std::ifstream in(path, std::ios::binary);
    std::string magic, dims1, dims2, maxval;
    in >> magic >> dims1 >> dims2 >> maxval;
    CHECK(magic == "P6");
    CHECK(dims1 == "3");
    CHECK(dims2 == "2");
    CHECK(maxval == "255");
    in.get();
    std::vector<unsigned char> pix(3 * 3 * 2);
    in.read(reinterpret_cast<char*>(pix.data()), std::streamsize(pix.size()));
    CHECK(in.gcount() == std::streamsize(pix.size()));
    CHECK(int(pix[0]) == 255);  // clamped high
    CHECK(int(pix[4]) == 0);    // clamped low
    std::filesystem::remove(path);
}

TEST_CASE("rmse of identical images is zero and scales correctly") {
    sf::ImageF a(4, 4), b(4, 4);
    CHECK(sf::rmse(a, b) == 0.0);
    for (float& v : b.rgb) v = 2.0f;
    CHECK(sf::rmse(a, b) == doctest::Approx(2.0));
}

TEST_CASE("parallel_for covers every index exactly once") {
    const int64_t n = 10007;
    std::vector<std::atomic<int>> hits(n);
    for (auto& h : hits) h.store(0);
    sf::parallel_for(n, [&](int64_t i) { hits[size_t(i)].fetch_add(1); });
    for (int64_t i = 0; i < n; ++i) CHECK(hits[size_t(i)].load() == 1);
}

TEST_CASE("thread cap honors explicit setting") {
    int before = sf::thread_cap();
    sf::set_thread_cap(3);
    CHECK(sf::thread_cap() == 3);
    sf::set_thread_cap(1);
    CHECK(sf::thread_cap() == 1);
    sf::set_thread_cap(before);
}

TEST_CASE("intersect_box slab test against known geometry") {
    sf::Bounds3 box{{-1, -1, -1}, {1, 1, 1}};
    double t0, t1;
    REQUIRE(sf::intersect_box(box, {0, 0, -5}, {0, 0, 1}, t0, t1));
    CHECK(t0 == doctest::Approx(4.0));
    CHECK(t1 == doctest::Approx(6.0));
    CHECK_FALSE(sf::intersect_box(box, {0, 5, -5}, {0, 0, 1}, t0, t1));
    // Ray starting inside: t0 negative, t1 positive.
    REQUIRE(sf::intersect_box(box, {0.5, 0, 0}, {1, 0, 0}, t0, t1));
    CHECK(t0 == doctest::Approx(-1.5));
    CHECK(t1 == doctest::Approx(0.5));
}

TEST_CASE("orthonormal basis is orthonormal for random directions") {
    sf::Pcg32 rng(5, 9);
    for (int i = 0; i < 200; ++i) {
        sf::Vec3 n = rng.next_unit_vector();
        sf::Vec3 t, b;
        sf::orthonormal_basis(n, t, b);
        CHECK(sf::length(t) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(sf::length(b) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(sf::dot(n, t)) < 1e-12);
        CHECK(std::abs(sf::dot(n, b)) < 1e-12);
        CHECK(std::abs(sf::dot(t, b)) < 1e-12);
    }
}
