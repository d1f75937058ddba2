// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

#include "scatterfield/feature_pipeline.h"

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

constexpr uint32_t kVfeatVersion = 1;

Vec3 voxel_center(const DensityGrid& g, int x, int y, int z) {
    return g.origin() + Vec3{(x + 0.5) * g.voxel_size(), (y + 0.5) * g.voxel_size(),
                             (z + 0.5) * g.voxel_size()};
}

}  // namespace

CombinerWeights CombinerWeights::identity(int level_count) {
    CombinerWeights w;
    w.kernels.assign(size_t(level_count), {});
    w.scales.assign(size_t(level_count), float(1.0 / level_count));
    for (auto& k : w.kernels) k[13] = 1.0f;  // center tap of the 3x3x3 stencil
    return w;
}

GradedTransmittanceField graded_transmittance(const DensityPyramid& pyramid,
                                              int level, const Vec3& light,
                                              double lambda, double step) {
    if (level < 0 || level >= pyramid.level_count())
        fail(Errc::invalid_argument, "graded_transmittance: invalid level");
    if (!(lambda > 0.0 && lambda < 1.0))
        fail(Errc::invalid_argument, "graded_transmittance: lambda outside (0,1)");
    const DensityGrid& rho = pyramid.level(level);
    GradedTransmittanceField field;
    field.level = level;
    field.light_dir = normalize(light);
    field.lambda = lambda;
    field.values = DensityGrid(rho.nx(), rho.ny(), rho.nz(), rho.voxel_size(),
                               rho.origin());
    double coeff = std::pow(lambda, level + 1);
    Bounds3 box = rho.bounds();
    Vec3 to_source = -field.light_dir;
    int nx = rho.nx(), ny = rho.ny();
    size_t n_voxels = size_t(rho.nx()) * rho.ny() * rho.nz();
    parallel_for(n_voxels, [&](size_t idx) {
        int x = int(idx % nx);
        int y = int((idx / nx) % ny);
        int z = int(idx / (size_t(nx) * ny));
        Vec3 p = voxel_center(rho, x, y, z);
        double t0, t1;
        double tau = 0.0;
        if (intersect_box(box, p, to_source, t0, t1) && t1 > 0.0)
            tau = rho.optical_depth(p, p + to_source * t1, step);
        field.values.values()[idx] = float(std::exp(-coeff * tau));
    });
    return field;
}

DensityGrid conv3_replicate(const DensityGrid& in, const std::array<float, 27>& kernel) {
    DensityGrid out(in.nx(), in.ny(), in.nz(), in.voxel_size(), in.origin());
    int nx = in.nx(), ny = in.ny(), nz = in.nz();
    parallel_for(size_t(nx) * ny * nz, [&](size_t idx) {
        int x = int(idx % nx);
        int y = int((idx / nx) % ny);
        int z = int(idx / (size_t(nx) * ny));
        double acc = 0.0;
        int t = 0;
        for (int dz = -1; dz <= 1; ++dz) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx, ++t) {
                    int sx = std::clamp(x + dx, 0, nx - 1);
                    int sy = std::clamp(y + dy, 0, ny - 1);
                    int sz = std::clamp(z + dz, 0, nz - 1);
                    acc += double(kernel[size_t(t)]) * in.at(sx, sy, sz);
                }
            }
        }
        out.values()[idx] = float(acc);
    });
    return out;
}

TransmittanceFeatureVolume combine_transmittance(
    const std::vector<GradedTransmittanceField>& fields,
    const CombinerWeights& weights) {
    if (fields.empty())
        fail(Errc::invalid_argument, "combine_transmittance: no fields");
    if (weights.level_count() != int(fields.size()) ||
        weights.scales.size() != fields.size())
        fail(Errc::shape_mismatch, "combine_transmittance: weight/level mismatch");
    for (const GradedTransmittanceField& f : fields) {
        if (length(f.light_dir - fields[0].light_dir) > 1e-9)
            fail(Errc::invalid_argument,
                 "combine_transmittance: mismatched light directions");
    }
    const DensityGrid& base = fields[0].values;
    TransmittanceFeatureVolume out;
    out.light_dir = fields[0].light_dir;
    out.weights = weights;
    out.values = DensityGrid(base.nx(), base.ny(), base.nz(), base.voxel_size(),
                             base.origin());
    int nx = base.nx(), ny = base.ny(), nz = base.nz();
    for (size_t li = 0; li < fields.size(); ++li) {
        DensityGrid conv = conv3_replicate(fields[li].values, weights.kernels[li]);
        double scale = weights.scales[li];
        parallel_for(size_t(nx) * ny * nz, [&](size_t idx) {
            int x = int(idx % nx);
            int y = int((idx / nx) % ny);
            int z = int(idx / (size_t(nx) * ny));
            // Coarse levels are sampled at the fine voxel centers, which
            // the clamp-to-edge rule keeps defined across the whole box.
            double v = conv.sample_trilinear(voxel_center(base, x, y, z));
            out.values.values()[idx] += float(scale * v);
        });
    }
    return out;
}

Vec3 light_entry_point(const Bounds3& bounds, const Vec3& p, const Vec3& light) {
    Vec3 to_source = -normalize(light);
    double t0, t1;
    if (!intersect_box(bounds, p, to_source, t0, t1))
        return p - normalize(light) * 1e-9;
    double t = std::max(t1, 1e-9);
    return p + to_source * t;
}

SampleFeatureBlock sample_features(const Vec3& p, const Vec3& omega,
                                   const Vec3& light, const SamplingTemplate& tmpl,
                                   const DensityGrid& density,
                                   const TransmittanceFeatureVolume& tvol,
                                   const PhaseModel& model, const PhaseTable& table,
                                   double template_scale) {
    SampleFeatureBlock block;
    block.p = p;
    block.omega = omega;
    block.light = light;
    Vec3 entry = light_entry_point(density.bounds(), p, light);
    std::vector<Vec3> placed = place_template(tmpl, p, omega, light, entry,
                                              template_scale);
    std::vector<double> caps = placed_cap_radii(tmpl, p, entry, template_scale);
    size_t n = placed.size();
    block.density.resize(n);
    block.transmittance.resize(n);
    block.phase.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const Vec3& s = placed[i];
        block.density[i] = float(density.sample_trilinear(s));
        block.transmittance[i] = float(tvol.sample(s));
        double dist = length(s - p);
        double f;
        if (dist <= 0.0) {
            f = 1.0;  // center point: both caps are the full sphere
        } else {
            double half = caps[i] >= dist ? kPi : std::asin(caps[i] / dist);
            f = phase_feature(table, model, omega, light, p, s, half);
        }
        block.phase[i] = float(f);
    }
    return block;
}

std::vector<CenterSpec> draw_centers(const DensityGrid& grid, int count,
                                     uint64_t seed, const Vec3& light) {
    if (count <= 0) fail(Errc::invalid_argument, "draw_centers: count must be positive");
    std::vector<uint32_t> occupied;
    const std::vector<float>& vals = grid.values();
    for (size_t i = 0; i < vals.size(); ++i)
        if (vals[i] > 0.0f) occupied.push_back(uint32_t(i));
    if (occupied.empty())
        fail(Errc::bad_value, "draw_centers: medium has no occupied voxel");
    Vec3 l = normalize(light);
    std::vector<CenterSpec> centers(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        Pcg32 rng(seed, uint64_t(i) + 1000);
        uint32_t vidx = occupied[rng.next_below(uint32_t(occupied.size()))];
        int x = int(vidx % uint32_t(grid.nx()));
        int y = int((vidx / uint32_t(grid.nx())) % uint32_t(grid.ny()));
        int z = int(vidx / (uint32_t(grid.nx()) * uint32_t(grid.ny())));
        Vec3 jitter{rng.next_double(), rng.next_double(), rng.next_double()};
        Vec3 p = grid.origin() + Vec3{(x + jitter.x) * grid.voxel_size(),
                                      (y + jitter.y) * grid.voxel_size(),
                                      (z + jitter.z) * grid.voxel_size()};
        centers[size_t(i)] = CenterSpec{p, rng.next_unit_vector(), l};
    }
    return centers;
}

TransmittanceFeatureVolume build_transmittance_volume(const DensityPyramid& pyramid,
                                                      const Vec3& light,
                                                      const CombinerWeights& weights,
                                                      const FeatureConfig& cfg) {
    std::vector<GradedTransmittanceField> fields;
    fields.reserve(size_t(pyramid.level_count()));
    for (int i = 0; i < pyramid.level_count(); ++i) {
        double step = cfg.step_scale * pyramid.level(i).voxel_size();
        fields.push_back(graded_transmittance(pyramid, i, light, cfg.lambda, step));
    }
    return combine_transmittance(fields, weights);
}

FeatureTable precompute_tables(const DensityGrid& density,
                               const DensityPyramid& pyramid,
                               const SamplingTemplate& diffuse_tmpl,
                               const SamplingTemplate& highlight_tmpl,
                               const std::vector<CenterSpec>& centers,
                               const PhaseModel& model, const FeatureConfig& cfg) {
    if (centers.empty())
        fail(Errc::invalid_argument, "precompute_tables: no centers");
    bool any = false;
    for (float v : density.values())
        if (v > 0.0f) { any = true; break; }
    if (!any) fail(Errc::bad_value, "precompute_tables: empty medium");

    FeatureTable table;
    table.lambda = cfg.lambda;
    table.template_scale = cfg.template_scale;
    table.combiner = CombinerWeights::identity(pyramid.level_count());
    TransmittanceFeatureVolume tvol =
        build_transmittance_volume(pyramid, centers[0].light, table.combiner, cfg);
    table.phase_table = PhaseTable(cfg.phase_g_res, cfg.phase_angle_res,
                                   cfg.phase_aperture_res, cfg.phase_quad_nodes);
    table.diffuse.resize(centers.size());
    table.highlight.resize(centers.size());
    parallel_for(centers.size(), [&](size_t i) {
        const CenterSpec& c = centers[i];
        table.diffuse[i] =
            sample_features(c.p, c.omega, c.light, diffuse_tmpl, density, tvol,
                            model, table.phase_table, cfg.template_scale);
        table.highlight[i] =
            sample_features(c.p, c.omega, c.light, highlight_tmpl, density, tvol,
                            model, table.phase_table, cfg.template_scale);
    });
    return table;
}

void write_feature_block(std::ostream& out, const SampleFeatureBlock& b) {
    wire::write_vec3(out, b.p);
    wire::write_vec3(out, b.omega);
    wire::write_vec3(out, b.light);
    for (const std::vector<float>* v : {&b.density, &b.transmittance, &b.phase})
        for (float x : *v) wire::write_f32(out, x);
}

SampleFeatureBlock read_feature_block(std::istream& in, uint32_t n_points) {
    SampleFeatureBlock b;
    b.p = wire::read_vec3(in);
    b.omega = wire::read_vec3(in);
    b.light = wire::read_vec3(in);
    for (std::vector<float>* v : {&b.density, &b.transmittance, &b.phase}) {
        v->resize(n_points);
        for (float& x : *v) x = wire::read_f32(in);
    }
    return b;
}

void save_feature_table(const FeatureTable& table, const std::string& path) {
    if (table.diffuse.size() != table.highlight.size())
        fail(Errc::shape_mismatch, "save_feature_table: center count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "save_feature_table: cannot open '" + path + "'");
    out.write("VFEA", 4);
    wire::write_u32(out, kVfeatVersion);
    wire::write_u32(out, uint32_t(table.diffuse.size()));
    uint32_t nd = table.diffuse.empty() ? 0 : uint32_t(table.diffuse[0].density.size());
    uint32_t nh =
        table.highlight.empty() ? 0 : uint32_t(table.highlight[0].density.size());
    wire::write_u32(out, nd);
    wire::write_u32(out, nh);
    wire::write_u32(out, uint32_t(table.phase_table.g_res()));
    wire::write_u32(out, uint32_t(table.phase_table.angle_res()));
    wire::write_u32(out, uint32_t(table.phase_table.aperture_res()));
    wire::write_u32(out, uint32_t(table.combiner.level_count()));
    wire::write_f64(out, table.lambda);
    wire::write_f64(out, table.template_scale);
    for (size_t i = 0; i < table.diffuse.size(); ++i) {
        write_feature_block(out, table.diffuse[i]);
        write_feature_block(out, table.highlight[i]);
    }
    for (float v : table.phase_table.values()) wire::write_f32(out, v);
    for (int li = 0; li < table.combiner.level_count(); ++li) {
        for (float k : table.combiner.kernels[size_t(li)]) wire::write_f32(out, k);
        wire::write_f32(out, table.combiner.scales[size_t(li)]);
    }
    if (!out) fail(Errc::io, "save_feature_table: write error on '" + path + "'");
}

FeatureTable load_feature_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "load_feature_table: cannot open '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VFEA", 4) != 0)
        fail(Errc::malformed_header, "load_feature_table: bad magic");
    uint32_t version = wire::read_u32(in);
    if (!in || version != kVfeatVersion)
        fail(Errc::malformed_header, "load_feature_table: unsupported version");
    uint32_t n_centers = wire::read_u32(in);
    uint32_t nd = wire::read_u32(in);
    uint32_t nh = wire::read_u32(in);
    uint32_t g_res = wire::read_u32(in);
    uint32_t angle_res = wire::read_u32(in);
    uint32_t aperture_res = wire::read_u32(in);
    uint32_t levels = wire::read_u32(in);
    FeatureTable table;
    table.lambda = wire::read_f64(in);
    table.template_scale = wire::read_f64(in);
    if (!in) fail(Errc::malformed_header, "load_feature_table: truncated header");
    table.diffuse.reserve(n_centers);
    table.highlight.reserve(n_centers);
    for (uint32_t i = 0; i < n_centers; ++i) {
        table.diffuse.push_back(read_feature_block(in, nd));
        table.highlight.push_back(read_feature_block(in, nh));
    }
    std::vector<float> pt(size_t(g_res) * angle_res * aperture_res);
    for (float& v : pt) v = wire::read_f32(in);
    table.phase_table = PhaseTable::from_values(int(g_res), int(angle_res),
                                                int(aperture_res), std::move(pt));
    table.combiner.kernels.resize(levels);
    table.combiner.scales.resize(levels);
    for (uint32_t li = 0; li < levels; ++li) {
        for (float& k : table.combiner.kernels[li]) k = wire::read_f32(in);
        table.combiner.scales[li] = wire::read_f32(in);
    }
    if (!in) fail(Errc::truncated, "load_feature_table: truncated payload");
    return table;
}

}  // namespace scatterfield
