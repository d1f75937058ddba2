// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/rte.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scatterfield/error.h"
#include "scatterfield/parallel.h"
#include "scatterfield/rng.h"
#include "wire.h"

namespace scatterfield {

namespace {

constexpr uint32_t kVdataVersion = 1;

Vec3 exp3(const Vec3& v) {
    return {std::exp(v.x), std::exp(v.y), std::exp(v.z)};
}

double max_component(const Vec3& v) { return std::max(v.x, std::max(v.y, v.z)); }

// Schedule-invariant seed for a point estimate: hashes the query
// position so every march step gets its own stream regardless of
// which thread evaluates it.
uint64_t hash_position(uint64_t base, const Vec3& p) {
    uint64_t bx, by, bz;
    std::memcpy(&bx, &p.x, 8);
    std::memcpy(&by, &p.y, 8);
    std::memcpy(&bz, &p.z, 8);
    return splitmix64(base ^ splitmix64(bx ^ splitmix64(by ^ splitmix64(bz))));
}

struct WalkContext {
    const Medium& medium;
    const DistantLight& light;
    double mu_t;      // gray extinction scale
    double majorant;  // mu_t * max density, for delta tracking
    Bounds3 bounds;
    double light_step;
};

WalkContext make_context(const Medium& medium, const DistantLight& light,
                         double step_scale) {
    medium.props.validate();
    medium.phase.validate();
    light.validate();
    double mu_t = medium.gray_sigma_t();
    return WalkContext{medium, light, mu_t, mu_t * medium.max_density(),
                       medium.grid.bounds(),
                       step_scale * medium.grid.voxel_size()};
}

// Next-event estimation: direct radiance scattered at x into the view
// travel direction w. with_phase=false leaves the phase factor to the
// caller (the co-directional Eq. 20 mode).
Vec3 next_event(const WalkContext& ctx, const Vec3& x, const Vec3& w,
                bool with_phase) {
    Vec3 entry = light_entry_point(ctx.bounds, x, ctx.light.direction);
    Vec3 T = transmittance(ctx.medium, x, entry, ctx.light_step);
    double f = with_phase
                   ? eval_phase(ctx.medium.phase, dot(-ctx.light.direction, w))
                   : 1.0;
    return T * ctx.light.intensity * f;
}

// Delta tracking along (x, dir): returns true with y set to a collision
// point distributed proportionally to mu_t * T, false if the flight
// escapes the grid. With an exact majorant (homogeneous medium) the
// first tentative collision is always accepted, which reduces to the
// closed-form inversion of the exponential.
bool sample_collision(const WalkContext& ctx, const Vec3& x, const Vec3& dir,
                      Pcg32& rng, Vec3& y) {
    if (ctx.majorant <= 0.0) return false;
    double t0, t1;
    if (!intersect_box(ctx.bounds, x, dir, t0, t1)) return false;
    double t = std::max(0.0, t0);
    for (;;) {
        t -= std::log(1.0 - rng.next_double()) / ctx.majorant;
        if (t >= t1) return false;
        Vec3 cand = x + dir * t;
        double sigma = ctx.medium.grid.sample_trilinear(cand) * ctx.mu_t;
        if (rng.next_double() * ctx.majorant < sigma) {
            y = cand;
            return true;
        }
    }
}

}  // namespace

double Medium::max_density() const {
    float m = 0.0f;
    for (float v : grid.values()) m = std::max(m, v);
    return double(m);
}

double Medium::gray_sigma_t() const {
    const Vec3& s = props.sigma_t_scale;
    if (std::abs(s.x - s.y) > 1e-12 || std::abs(s.x - s.z) > 1e-12)
        fail(Errc::invalid_argument,
             "medium: Monte Carlo estimators require a gray extinction scale");
    return s.x;
}

void DistantLight::validate() const {
    if (std::abs(length(direction) - 1.0) > 1e-9)
        fail(Errc::bad_value, "light: direction must be unit length");
    if (intensity.x < 0.0 || intensity.y < 0.0 || intensity.z < 0.0)
        fail(Errc::bad_value, "light: intensity must be nonnegative");
}

Vec3 NeumannTerms::partial_sum(int upto) const {
    int k = upto < 0 ? int(terms.size()) - 1 : std::min(upto, int(terms.size()) - 1);
    Vec3 sum;
    Vec3 eta_pow{1.0, 1.0, 1.0};
    for (int i = 0; i <= k; ++i) {
        sum += eta_pow * terms[size_t(i)];
        eta_pow = eta_pow * albedo;
    }
    return sum;
}

Vec3 transmittance(const Medium& medium, const Vec3& p, const Vec3& q, double step) {
    double tau = medium.grid.optical_depth(p, q, step);
    return exp3(-tau * medium.props.sigma_t_scale);
}

Vec3 single_scatter(const Medium& medium, const DistantLight& light, const Vec3& p,
                    const Vec3& omega, double step) {
    Vec3 entry = light_entry_point(medium.grid.bounds(), p, light.direction);
    Vec3 T = transmittance(medium, p, entry, step);
    double f = eval_phase(medium.phase, dot(-light.direction, omega));
    return T * light.intensity * f;
}

Vec3 neumann_apply(const Medium& medium, const DistantLight& light,
                   const ScatterField& F_prev, const Vec3& p, const Vec3& omega,
                   int samples, uint64_t seed, double step, Vec3* stderr_out) {
    if (samples < 1) fail(Errc::invalid_argument, "neumann_apply: samples must be >= 1");
    WalkContext ctx = make_context(medium, light, step / medium.grid.voxel_size());
    Vec3 sum, sumsq;
    for (int s = 0; s < samples; ++s) {
        Pcg32 rng(seed, uint64_t(s));
        Vec3 dir = rng.next_unit_vector();
        double f = eval_phase(medium.phase, dot(dir, omega));
        Vec3 e;
        Vec3 y;
        if (sample_collision(ctx, p, dir, rng, y))
            e = (4.0 * kPi * f) * F_prev(y, dir);
        sum += e;
        sumsq += e * e;
    }
    Vec3 mean = sum / double(samples);
    if (stderr_out) {
        Vec3 var = sumsq / double(samples) - mean * mean;
        *stderr_out = Vec3{std::sqrt(std::max(0.0, var.x) / samples),
                           std::sqrt(std::max(0.0, var.y) / samples),
                           std::sqrt(std::max(0.0, var.z) / samples)};
    }
    return mean;
}

NeumannTerms neumann_series(const Medium& medium, const DistantLight& light,
                            const Vec3& p, const Vec3& omega,
                            const NeumannOptions& opts) {
    if (opts.order < 0) fail(Errc::invalid_argument, "neumann_series: order must be >= 0");
    if (opts.samples < 1)
        fail(Errc::invalid_argument, "neumann_series: samples must be >= 1");
    WalkContext ctx = make_context(medium, light, opts.step_scale);
    int k = opts.order;
    // Constant phase value of the co-directional Eq. 20 variant; each
    // order i then carries f_const^{i+1} outside its transport integral.
    double f_const = eval_phase(medium.phase, dot(-light.direction, omega));
    Vec3 eta = medium.props.albedo;

    std::vector<Vec3> sums(size_t(k) + 1), sumsqs(size_t(k) + 1);
    Vec3 psum, psumsq;
    std::vector<Vec3> walk_terms(size_t(k) + 1);
    for (int s = 0; s < opts.samples; ++s) {
        Pcg32 rng(opts.seed, uint64_t(s));
        for (Vec3& t : walk_terms) t = Vec3{};
        Vec3 x = p;
        Vec3 w = omega;
        // One shared walk scores every order: the prefix holds the
        // direction weights of the first i extensions, and an escape
        // leaves the remaining (unbiased) order estimates at zero.
        double prefix = 1.0;
        walk_terms[0] = next_event(ctx, x, w, !opts.co_directional);
        for (int i = 1; i <= k; ++i) {
            Vec3 dir = rng.next_unit_vector();
            double f = opts.co_directional
                           ? 1.0
                           : eval_phase(medium.phase, dot(dir, w));
            prefix *= 4.0 * kPi * f;
            Vec3 y;
            if (!sample_collision(ctx, x, dir, rng, y)) break;
            x = y;
            w = dir;
            walk_terms[size_t(i)] = prefix * next_event(ctx, x, w, !opts.co_directional);
        }
        if (opts.co_directional) {
            double fp = f_const;
            for (int i = 0; i <= k; ++i) {
                walk_terms[size_t(i)] *= fp;
                fp *= f_const;
            }
        }
        Vec3 partial;
        Vec3 eta_pow{1.0, 1.0, 1.0};
        for (int i = 0; i <= k; ++i) {
            sums[size_t(i)] += walk_terms[size_t(i)];
            sumsqs[size_t(i)] += walk_terms[size_t(i)] * walk_terms[size_t(i)];
            partial += eta_pow * walk_terms[size_t(i)];
            eta_pow = eta_pow * eta;
        }
        psum += partial;
        psumsq += partial * partial;
    }

    NeumannTerms out;
    out.albedo = eta;
    double n = double(opts.samples);
    auto stderr3 = [n](const Vec3& sum, const Vec3& sumsq) {
        Vec3 mean = sum / n;
        Vec3 var = sumsq / n - mean * mean;
        return Vec3{std::sqrt(std::max(0.0, var.x) / n),
                    std::sqrt(std::max(0.0, var.y) / n),
                    std::sqrt(std::max(0.0, var.z) / n)};
    };
    for (int i = 0; i <= k; ++i) {
        out.terms.push_back(sums[size_t(i)] / n);
        out.term_stderr.push_back(stderr3(sums[size_t(i)], sumsqs[size_t(i)]));
    }
    out.partial_sum_stderr = stderr3(psum, psumsq);
    return out;
}

ScatterLabel path_trace_inscatter(const Medium& medium, const DistantLight& light,
                                  const Vec3& p, const Vec3& omega, int spp,
                                  uint64_t seed, const PathTraceOptions& opts) {
    if (spp < 1) fail(Errc::invalid_argument, "path_trace_inscatter: spp must be >= 1");
    WalkContext ctx = make_context(medium, light, opts.step_scale);
    Vec3 eta = medium.props.albedo;
    double rr_survival = clamp(max_component(eta), 0.05, 0.95);

    Vec3 sum, sumsq;
    for (int s = 0; s < spp; ++s) {
        Pcg32 rng(seed, uint64_t(s));
        Vec3 x = p;
        Vec3 w = omega;
        Vec3 beta{1.0, 1.0, 1.0};
        Vec3 F;
        for (int depth = 0; depth <= opts.max_depth; ++depth) {
            F += beta * next_event(ctx, x, w, true);
            Vec3 dir = rng.next_unit_vector();
            double f = eval_phase(medium.phase, dot(dir, w));
            Vec3 y;
            if (!sample_collision(ctx, x, dir, rng, y)) break;
            beta = beta * ((4.0 * kPi * f) * eta);  // mu_s / mu_t = eta
            if (max_component(beta) <= 0.0) break;
            x = y;
            w = dir;
            if (depth >= opts.rr_start_depth) {
                if (rng.next_double() >= rr_survival) break;
                beta = beta / rr_survival;
            }
        }
        sum += F;
        sumsq += F * F;
    }
    ScatterLabel label;
    label.p = p;
    label.omega = omega;
    label.spp = spp;
    label.F = sum / double(spp);
    Vec3 var = sumsq / double(spp) - label.F * label.F;
    label.stderr_ = Vec3{std::sqrt(std::max(0.0, var.x) / spp),
                         std::sqrt(std::max(0.0, var.y) / spp),
                         std::sqrt(std::max(0.0, var.z) / spp)};
    return label;
}

DatasetZ generate_dataset(const Medium& medium, const DistantLight& light,
                          const FeatureTable& features,
                          const std::vector<CenterSpec>& centers,
                          const DatasetOptions& opts) {
    if (centers.size() != features.diffuse.size() ||
        centers.size() != features.highlight.size())
        fail(Errc::shape_mismatch, "generate_dataset: center/feature count mismatch");
    DatasetZ dataset;
    dataset.entries.resize(centers.size());
    parallel_for(centers.size(), [&](size_t i) {
        DatasetEntry& entry = dataset.entries[i];
        entry.diffuse = features.diffuse[i];
        entry.highlight = features.highlight[i];
        uint64_t entry_seed = splitmix64(opts.seed + 0x9e3779b9u + i);
        entry.label = path_trace_inscatter(medium, light, centers[i].p,
                                           centers[i].omega, opts.spp, entry_seed,
                                           opts.trace);
        for (int c = 0; c < 3; ++c) {
            double F = entry.label.F[c];
            double se = entry.label.stderr_[c];
            if (se > opts.stderr_ceiling * std::max(F, 1e-3))
                entry.high_variance = true;
        }
    });
    size_t flagged = 0;
    for (const DatasetEntry& e : dataset.entries)
        if (e.high_variance) ++flagged;
    dataset.manifest["entry_count"] = dataset.entries.size();
    dataset.manifest["spp"] = opts.spp;
    dataset.manifest["seed"] = opts.seed;
    dataset.manifest["stderr_ceiling"] = opts.stderr_ceiling;
    dataset.manifest["flagged_entries"] = flagged;
    dataset.manifest["albedo"] = {medium.props.albedo.x, medium.props.albedo.y,
                                  medium.props.albedo.z};
    dataset.manifest["sigma_t_scale"] = {medium.props.sigma_t_scale.x,
                                         medium.props.sigma_t_scale.y,
                                         medium.props.sigma_t_scale.z};
    dataset.manifest["light_dir"] = {light.direction.x, light.direction.y,
                                     light.direction.z};
    dataset.manifest["light_intensity"] = {light.intensity.x, light.intensity.y,
                                           light.intensity.z};
    return dataset;
}

void save_dataset(const DatasetZ& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "save_dataset: cannot open '" + path + "'");
    out.write("VDAT", 4);
    wire::write_u32(out, kVdataVersion);
    std::string manifest = dataset.manifest.dump();
    wire::write_u32(out, uint32_t(manifest.size()));
    out.write(manifest.data(), std::streamsize(manifest.size()));
    wire::write_u32(out, uint32_t(dataset.entries.size()));
    uint32_t nd = dataset.entries.empty()
                      ? 0
                      : uint32_t(dataset.entries[0].diffuse.density.size());
    uint32_t nh = dataset.entries.empty()
                      ? 0
                      : uint32_t(dataset.entries[0].highlight.density.size());
    wire::write_u32(out, nd);
    wire::write_u32(out, nh);
    for (const DatasetEntry& e : dataset.entries) {
        write_feature_block(out, e.diffuse);
        write_feature_block(out, e.highlight);
        for (int c = 0; c < 3; ++c) wire::write_f32(out, float(e.label.F[c]));
        for (int c = 0; c < 3; ++c) wire::write_f32(out, float(e.label.stderr_[c]));
        wire::write_u32(out, uint32_t(e.label.spp));
        wire::write_u32(out, e.high_variance ? 1u : 0u);
    }
    if (!out) fail(Errc::io, "save_dataset: write error on '" + path + "'");
}

DatasetZ load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "load_dataset: cannot open '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VDAT", 4) != 0)
        fail(Errc::malformed_header, "load_dataset: bad magic in '" + path + "'");
    uint32_t version = wire::read_u32(in);
    if (!in || version != kVdataVersion)
        fail(Errc::malformed_header, "load_dataset: unsupported version");
    uint32_t manifest_len = wire::read_u32(in);
    std::string manifest(manifest_len, '\0');
    in.read(manifest.data(), std::streamsize(manifest_len));
    if (!in) fail(Errc::truncated, "load_dataset: truncated manifest");
    DatasetZ dataset;
    try {
        dataset.manifest = nlohmann::json::parse(manifest);
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::malformed_header, std::string("load_dataset: ") + e.what());
    }
    uint32_t n = wire::read_u32(in);
    uint32_t nd = wire::read_u32(in);
    uint32_t nh = wire::read_u32(in);
    dataset.entries.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        DatasetEntry& e = dataset.entries[i];
        e.diffuse = read_feature_block(in, nd);
        e.highlight = read_feature_block(in, nh);
        for (int c = 0; c < 3; ++c) {
            double v = wire::read_f32(in);
            (c == 0 ? e.label.F.x : c == 1 ? e.label.F.y : e.label.F.z) = v;
        }
        for (int c = 0; c < 3; ++c) {
            double v = wire::read_f32(in);
            (c == 0 ? e.label.stderr_.x
                    : c == 1 ? e.label.stderr_.y : e.label.stderr_.z) = v;
        }
        e.label.spp = int(wire::read_u32(in));
        e.high_variance = wire::read_u32(in) != 0;
        e.label.p = e.diffuse.p;
        e.label.omega = e.diffuse.omega;
    }
    if (!in) fail(Errc::truncated, "load_dataset: truncated payload");
    return dataset;
}

ImageF render_volume(const Medium& medium, const Camera& camera,
                     const InscatterProvider& provider, const RenderOptions& opts) {
    medium.props.validate();
    Bounds3 box = medium.grid.bounds();
    double step = opts.step_scale * medium.grid.voxel_size();
    ImageF img(camera.width(), camera.height());
    Vec3 mu_t_scale = medium.props.sigma_t_scale;
    Vec3 albedo = medium.props.albedo;
    parallel_for(size_t(camera.width()) * camera.height(), [&](size_t idx) {
        int px = int(idx % camera.width());
        int py = int(idx / camera.width());
        Ray ray = camera.primary_ray(px, py);
        Vec3 L;
        Vec3 T{1.0, 1.0, 1.0};
        double t0, t1;
        if (intersect_box(box, ray.origin, ray.direction, t0, t1) && t1 > 0.0) {
            t0 = std::max(t0, 0.0);
            int n = std::max(1, int(std::ceil((t1 - t0) / step)));
            double h = (t1 - t0) / n;
            for (int k = 0; k < n; ++k) {
                Vec3 x = ray.origin + ray.direction * (t0 + (k + 0.5) * h);
                double rho = medium.grid.sample_trilinear(x);
                if (rho > 0.0) {
                    Vec3 sigma_t = mu_t_scale * rho;
                    Vec3 sigma_s = albedo * sigma_t;
                    Vec3 F = provider(x, ray.direction, uint32_t(idx));
                    // Second-order: attenuate to the segment midpoint.
                    Vec3 T_mid = T * exp3(-0.5 * h * sigma_t);
                    L += T_mid * sigma_s * F * h;
                    T = T * exp3(-h * sigma_t);
                }
            }
        }
        L += T * opts.background;
        float* px_out = img.pixel(px, py);
        px_out[0] = float(L.x);
        px_out[1] = float(L.y);
        px_out[2] = float(L.z);
    });
    return img;
}

ImageF render_reference(const Medium& medium, const DistantLight& light,
                        const Camera& camera, int spp, uint64_t seed,
                        const RenderOptions& opts) {
    PathTraceOptions trace;
    trace.step_scale = opts.step_scale;
    return render_volume(
        medium, camera,
        [&](const Vec3& x, const Vec3& w, uint32_t) {
            return path_trace_inscatter(medium, light, x, w, spp,
                                        hash_position(seed, x), trace)
                .F;
        },
        opts);
}

ImageF render_single_scatter(const Medium& medium, const DistantLight& light,
                             const Camera& camera, const RenderOptions& opts) {
    double step = opts.step_scale * medium.grid.voxel_size();
    return render_volume(
        medium, camera,
        [&](const Vec3& x, const Vec3& w, uint32_t) {
            return single_scatter(medium, light, x, w, step);
        },
        opts);
}

}  // namespace scatterfield
