// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/templates.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

#include "scatterfield/error.h"
#include "scatterfield/rng.h"

namespace scatterfield {

namespace {

constexpr int kCandidatesPerPoint = 64;

using RegionSampler = std::function<Vec3(Pcg32&)>;

// Uniform point in the spherical shell (r_in, r_out]; the open lower
// bound keeps strict shell containment for layer invariants.
Vec3 sample_shell(Pcg32& rng, double r_in, double r_out) {
    Vec3 dir = rng.next_unit_vector();
    double u = 1.0 - rng.next_double();  // (0, 1]
    double r3 = r_in * r_in * r_in + u * (r_out * r_out * r_out - r_in * r_in * r_in);
    return dir * std::cbrt(r3);
}

// Uniform point in the cone frustum about +z with apex at the origin:
// axial range (z0, z1], lateral radius z * tan_theta. A zero tan_theta
// degenerates to uniform samples on the axis segment.
Vec3 sample_frustum(Pcg32& rng, double z0, double z1, double tan_theta) {
    double u = 1.0 - rng.next_double();
    double z;
    if (tan_theta > 0.0) {
        double z3 = z0 * z0 * z0 + u * (z1 * z1 * z1 - z0 * z0 * z0);
        z = std::cbrt(z3);  // cross-section area grows as z^2
    } else {
        z = z0 + u * (z1 - z0);
    }
    double rad = z * tan_theta * std::sqrt(rng.next_double());
    double phi = 2.0 * kPi * rng.next_double();
    return Vec3{rad * std::cos(phi), rad * std::sin(phi), z};
}

double min_distance_to(const std::vector<Vec3>& pts, const Vec3& c) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : pts) best = std::min(best, length(p - c));
    return best;
}

// Mitchell's best-candidate sampling: each new point is the farthest
// (from the existing set) of kCandidatesPerPoint uniform draws.
void best_candidate_fill(std::vector<Vec3>& pts, int add_count,
                         const RegionSampler& sampler, Pcg32& rng) {
    for (int n = 0; n < add_count; ++n) {
        if (pts.empty()) {
            pts.push_back(sampler(rng));
            continue;
        }
        Vec3 best_pt;
        double best_d = -1.0;
        for (int c = 0; c < kCandidatesPerPoint; ++c) {
            Vec3 cand = sampler(rng);
            double d = min_distance_to(pts, cand);
            if (d > best_d) {
                best_d = d;
                best_pt = cand;
            }
        }
        pts.push_back(best_pt);
    }
}

double layer_spacing_or_fallback(const std::vector<Vec3>& pts, double fallback) {
    return pts.size() >= 2 ? uniformity_metric(pts) : fallback;
}

}  // namespace

int SamplingTemplate::total_points() const {
    int n = 0;
    for (const TemplateLayer& layer : layers) n += int(layer.points.size());
    return n;
}

std::vector<int> diffuse_default_counts() { return {6, 8, 12, 16, 24, 32, 48, 48}; }
std::vector<int> highlight_default_counts() { return {32, 16, 16, 8}; }

double uniformity_metric(const std::vector<Vec3>& points) {
    if (points.size() < 2)
        fail(Errc::invalid_argument, "uniformity_metric: need at least 2 points");
    double sum = 0.0;
    for (size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < points.size(); ++j) {
            if (j == i) continue;
            best = std::min(best, length(points[i] - points[j]));
        }
        sum += best;
    }
    return sum / double(points.size());
}

double layer_radius(int i, double D_unit) {
    if (i < 1) fail(Errc::invalid_argument, "layer_radius: layer index must be >= 1");
    if (!(D_unit > 0.0))
        fail(Errc::invalid_argument, "layer_radius: D_unit must be positive");
    double xi = 1.0 - 0.08 * std::min(i, 5);
    return (std::pow(2.0, i - 1) / (256.0 * D_unit)) * xi;
}

SamplingTemplate generate_diffuse_template(const std::vector<int>& counts,
                                           uint64_t seed) {
    if (counts.size() != 8)
        fail(Errc::invalid_argument, "diffuse template: need 8 layer counts");
    for (int c : counts)
        if (c <= 0) fail(Errc::invalid_argument, "diffuse template: zero layer count");

    // Radii first: each layer's D is measured on a unit-outer-radius
    // calibration run of the same generator (the radius law needs D
    // before the world shell exists), then points are regenerated
    // directly inside the final shell so containment is exact.
    int n_layers = int(counts.size());
    std::vector<double> radii(n_layers, 0.0);
    for (int i = 1; i < n_layers; ++i) {
        Pcg32 rng(seed, uint64_t(2 * i));
        std::vector<Vec3> calib;
        best_candidate_fill(calib, counts[size_t(i)],
                            [](Pcg32& r) { return sample_shell(r, 0.5, 1.0); }, rng);
        radii[size_t(i)] = layer_radius(i, uniformity_metric(calib));
    }
    radii[0] = radii[1] * 0.5;
    for (int i = 2; i < n_layers; ++i) {
        if (!(radii[size_t(i)] > radii[size_t(i - 1)]))
            fail(Errc::numeric, "diffuse template: radii not strictly increasing");
    }

    SamplingTemplate tmpl;
    tmpl.kind = TemplateKind::Diffuse;
    tmpl.seed = seed;
    for (int i = 0; i < n_layers; ++i) {
        TemplateLayer layer;
        layer.index = i;
        layer.radius = radii[size_t(i)];
        Pcg32 rng(seed, uint64_t(2 * i + 1));
        if (i == 0) {
            // One pinned center point, the rest spread through the ball.
            layer.points.push_back(Vec3{0, 0, 0});
            double r0 = radii[0];
            best_candidate_fill(layer.points, counts[0] - 1,
                                [r0](Pcg32& r) { return sample_shell(r, 0.0, r0); },
                                rng);
        } else {
            double r_in = radii[size_t(i - 1)], r_out = radii[size_t(i)];
            best_candidate_fill(
                layer.points, counts[size_t(i)],
                [r_in, r_out](Pcg32& r) { return sample_shell(r, r_in, r_out); },
                rng);
        }
        layer.cap_radius =
            0.5 * layer_spacing_or_fallback(layer.points, layer.radius);
        tmpl.layers.push_back(std::move(layer));
    }
    return tmpl;
}

SamplingTemplate generate_highlight_template(const std::vector<int>& counts,
                                             double entry_to_p_distance,
                                             double cone_half_angle, uint64_t seed) {
    if (counts.size() != 4)
        fail(Errc::invalid_argument, "highlight template: need 4 layer counts");
    for (int c : counts)
        if (c <= 0) fail(Errc::invalid_argument, "highlight template: zero layer count");
    if (!(entry_to_p_distance > 0.0))
        fail(Errc::invalid_argument, "highlight template: zero entry distance");

    SamplingTemplate tmpl;
    tmpl.kind = TemplateKind::Highlight;
    tmpl.seed = seed;
    tmpl.gen_distance = entry_to_p_distance;
    tmpl.cone_half_angle = cone_half_angle;
    double L = entry_to_p_distance;
    double tan_theta = std::tan(cone_half_angle);
    for (int k = 0; k < 4; ++k) {
        TemplateLayer layer;
        layer.index = k;
        double z0 = L * k / 4.0, z1 = L * (k + 1) / 4.0;
        layer.radius = z1;
        Pcg32 rng(seed, uint64_t(200 + k));
        best_candidate_fill(layer.points, counts[size_t(k)],
                            [z0, z1, tan_theta](Pcg32& r) {
                                return sample_frustum(r, z0, z1, tan_theta);
                            },
                            rng);
        layer.cap_radius = 0.5 * layer_spacing_or_fallback(layer.points, L / 8.0);
        tmpl.layers.push_back(std::move(layer));
    }
    return tmpl;
}

std::vector<Vec3> place_template(const SamplingTemplate& tmpl, const Vec3& p,
                                 const Vec3& omega, const Vec3& light,
                                 const Vec3& entry, double template_scale) {
    (void)light;
    std::vector<Vec3> out;
    out.reserve(size_t(tmpl.total_points()));
    if (tmpl.kind == TemplateKind::Diffuse) {
        for (const TemplateLayer& layer : tmpl.layers)
            for (const Vec3& q : layer.points) out.push_back(p + q * template_scale);
        return out;
    }
    Vec3 span = p - entry;
    double len = length(span);
    if (len <= 0.0)
        fail(Errc::invalid_argument, "place_template: entry coincides with p");
    Vec3 axis = span * (1.0 / len);
    // Lateral frame from omega so rotating all inputs co-rotates the
    // placed points (the frustum itself is rotationally symmetric).
    Vec3 t = omega - axis * dot(omega, axis);
    double tl = length(t);
    Vec3 b;
    if (tl > 1e-9) {
        t = t * (1.0 / tl);
        b = cross(axis, t);
    } else {
        orthonormal_basis(axis, t, b);
    }
    double scale = len / tmpl.gen_distance;
    for (const TemplateLayer& layer : tmpl.layers) {
        for (const Vec3& q : layer.points)
            out.push_back(entry + (t * q.x + b * q.y + axis * q.z) * scale);
    }
    return out;
}

std::vector<double> placed_cap_radii(const SamplingTemplate& tmpl, const Vec3& p,
                                     const Vec3& entry, double template_scale) {
    double scale = template_scale;
    if (tmpl.kind == TemplateKind::Highlight) {
        double len = length(p - entry);
        if (len <= 0.0)
            fail(Errc::invalid_argument, "placed_cap_radii: entry coincides with p");
        scale = len / tmpl.gen_distance;
    }
    std::vector<double> out;
    out.reserve(size_t(tmpl.total_points()));
    for (const TemplateLayer& layer : tmpl.layers)
        out.insert(out.end(), layer.points.size(), layer.cap_radius * scale);
    return out;
}

void save_template(const SamplingTemplate& tmpl, const std::string& path) {
    nlohmann::json j;
    j["kind"] = tmpl.kind == TemplateKind::Diffuse ? "diffuse" : "highlight";
    j["seed"] = tmpl.seed;
    if (tmpl.kind == TemplateKind::Highlight) {
        j["gen_distance"] = tmpl.gen_distance;
        j["cone_half_angle"] = tmpl.cone_half_angle;
    }
    nlohmann::json layers = nlohmann::json::array();
    for (const TemplateLayer& layer : tmpl.layers) {
        nlohmann::json jl;
        jl["index"] = layer.index;
        jl["radius"] = layer.radius;
        jl["cap_radius"] = layer.cap_radius;
        jl["count"] = layer.points.size();
        nlohmann::json pts = nlohmann::json::array();
        for (const Vec3& q : layer.points)
            pts.push_back(nlohmann::json::array({q.x, q.y, q.z}));
        jl["points"] = std::move(pts);
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    std::ofstream out(path);
    if (!out) fail(Errc::io, "save_template: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) fail(Errc::io, "save_template: write error on '" + path + "'");
}

SamplingTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io, "load_template: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("load_template: ") + e.what());
    }
    SamplingTemplate tmpl;
    try {
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "diffuse") {
            tmpl.kind = TemplateKind::Diffuse;
        } else if (kind == "highlight") {
            tmpl.kind = TemplateKind::Highlight;
        } else {
            fail(Errc::bad_value, "load_template: unknown kind '" + kind + "'");
        }
        tmpl.seed = j.at("seed").get<uint64_t>();
        if (tmpl.kind == TemplateKind::Highlight) {
            tmpl.gen_distance = j.at("gen_distance").get<double>();
            tmpl.cone_half_angle = j.at("cone_half_angle").get<double>();
        }
        for (const nlohmann::json& jl : j.at("layers")) {
            TemplateLayer layer;
            layer.index = jl.at("index").get<int>();
            layer.radius = jl.at("radius").get<double>();
            layer.cap_radius = jl.at("cap_radius").get<double>();
            for (const nlohmann::json& pt : jl.at("points")) {
                layer.points.push_back(Vec3{pt.at(0).get<double>(),
                                            pt.at(1).get<double>(),
                                            pt.at(2).get<double>()});
            }
            if (layer.points.size() != jl.at("count").get<size_t>())
                fail(Errc::truncated, "load_template: point count mismatch");
            tmpl.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("load_template: ") + e.what());
    }
    return tmpl;
}

}  // namespace scatterfield
