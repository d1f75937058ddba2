// Copyright 2026 The scatterfield authors
// SPDX-License-Identifier: Apache-2.0

// scatterfield: command-line pipeline driver. Every stage writes its
// artifact plus a JSON manifest recording input digests, parameters,
// and timings; downstream stages refuse inputs whose provenance chain
// disagrees (exit 3). Reruns with identical inputs and parameters are
// digest-cache no-ops.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scatterfield/digest.h"
#include "scatterfield/error.h"
#include "scatterfield/feature_pipeline.h"
#include "scatterfield/image.h"
#include "scatterfield/parallel.h"
#include "scatterfield/predictor.h"
#include "scatterfield/rte.h"
#include "scatterfield/scene_gen.h"
#include "scatterfield/templates.h"
#include "scatterfield/volume_grid.h"

namespace sf = scatterfield;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitProvenance = 3;
constexpr int kExitNumeric = 4;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// ---------------------------------------------------------------- scene ---

struct Scene {
    std::string medium_path;
    sf::MediumProperties props;
    sf::PhaseModel phase;
    sf::DistantLight light;
    sf::Vec3 cam_position{0.0, 0.0, -3.0};
    sf::Vec3 cam_look_at{0.0, 0.0, 0.0};
    sf::Vec3 cam_up{0.0, 1.0, 0.0};
    double cam_vfov = 45.0;
    int cam_width = 64;
    int cam_height = 64;
    double template_scale = 1.0;
    double step_scale = 0.5;
    uint64_t seed = 1;
    std::string diffuse_template_path;
    std::string highlight_template_path;
};

sf::Vec3 vec3_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        sf::fail(sf::Errc::malformed_header, std::string(what) + " must be a 3-array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) sf::fail(sf::Errc::io, "cannot open scene: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) sf::fail(sf::Errc::malformed_header, "invalid scene JSON: " + path);
    Scene s;
    try {
        const json& med = j.at("medium");
        s.medium_path = med.at("path").get<std::string>();
        s.props.sigma_t_scale = vec3_from(med.at("sigma_t"), "medium.sigma_t");
        s.props.albedo = vec3_from(med.at("albedo"), "medium.albedo");
        s.props.material_class =
            sf::material_class_from_name(med.at("material_class").get<std::string>());

        const json& ph = j.at("phase");
        std::string kind = ph.at("kind").get<std::string>();
        if (kind == "isotropic") {
            s.phase = sf::PhaseModel::isotropic();
        } else if (kind == "hg") {
            s.phase = sf::PhaseModel::hg(ph.at("g")[0].get<double>());
        } else if (kind == "material") {
            s.phase = sf::PhaseModel::for_material(
                s.props.material_class, ph.at("g").get<std::vector<double>>());
        } else {
            sf::fail(sf::Errc::malformed_header, "unknown phase kind: " + kind);
        }

        const json& li = j.at("light");
        s.light.direction = sf::normalize(vec3_from(li.at("direction"), "light.direction"));
        s.light.intensity = vec3_from(li.at("intensity"), "light.intensity");

        const json& cam = j.at("camera");
        s.cam_position = vec3_from(cam.at("position"), "camera.position");
        s.cam_look_at = vec3_from(cam.at("look_at"), "camera.look_at");
        s.cam_up = vec3_from(cam.at("up"), "camera.up");
        s.cam_vfov = cam.at("vfov").get<double>();
        s.cam_width = cam.at("width").get<int>();
        s.cam_height = cam.at("height").get<int>();

        s.template_scale = j.value("template_scale", 1.0);
        s.step_scale = j.value("step_scale", 0.5);
        s.seed = j.value("seed", uint64_t(1));
        if (j.contains("paths")) {
            s.diffuse_template_path = j["paths"].value("diffuse_template", "");
            s.highlight_template_path = j["paths"].value("highlight_template", "");
        }
    } catch (const json::exception& e) {
        sf::fail(sf::Errc::malformed_header, std::string("scene: ") + e.what());
    }
    s.props.validate();
    s.phase.validate();
    s.light.validate();
    return s;
}

sf::Medium load_medium(const Scene& s) {
    sf::Medium m;
    m.grid = sf::load_density(s.medium_path);
    m.props = s.props;
    m.phase = s.phase;
    return m;
}

// ------------------------------------------------------------- manifests ---

std::string manifest_path(const std::string& artifact) {
    return artifact + ".manifest.json";
}

std::optional<json> load_manifest(const std::string& artifact) {
    std::ifstream in(manifest_path(artifact));
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        sf::fail(sf::Errc::malformed_header, "corrupt manifest: " + manifest_path(artifact));
    return j;
}

// One pipeline stage's provenance bookkeeping.
class Stage {
  public:
    Stage(std::string command, json params)
        : command_(std::move(command)), params_(std::move(params)), start_(now_seconds()) {}

    // Registers an input artifact. Chained names (medium, features,
    // dataset, network, templates) must resolve to one digest across
    // every manifest that mentions them.
    void input(const std::string& name, const std::string& path, bool chained = true) {
        if (!std::filesystem::exists(path))
            sf::fail(sf::Errc::io, command_ + ": missing input '" + name + "': " + path);
        std::string digest = sf::sha256_file_hex(path);
        inputs_[name] = {{"path", path}, {"digest", digest}};
        if (!chained) return;
        note_digest(name, digest, "input " + path);
        if (std::optional<json> m = load_manifest(path)) {
            // The artifact must be the one its manifest describes...
            std::string recorded = m->value("artifact_digest", "");
            if (!recorded.empty() && recorded != digest)
                sf::fail(sf::Errc::provenance_mismatch,
                         path + " does not match its manifest (rebuilt or edited?)");
            // ...and its recorded inputs must agree with ours.
            if (m->contains("inputs"))
                for (const auto& [k, v] : (*m)["inputs"].items())
                    if (v.contains("digest") && is_chained_name(k))
                        note_digest(k, v["digest"].get<std::string>(),
                                    "manifest of " + path);
        }
    }

    // True when the output exists and was produced from identical
    // inputs and parameters (stage rerun is a no-op).
    bool cache_hit(const std::string& primary_output) const {
        if (!std::filesystem::exists(primary_output)) return false;
        std::optional<json> m = load_manifest(primary_output);
        if (!m) return false;
        if (m->value("command", "") != command_) return false;
        if (!m->contains("params") || (*m)["params"] != params_) return false;
        json previous = m->value("inputs", json::object());
        if (previous.size() != inputs_.size()) return false;
        for (const auto& [k, v] : inputs_.items()) {
            if (!previous.contains(k)) return false;
            if (previous[k].value("digest", "") != v["digest"].get<std::string>())
                return false;
        }
        std::string recorded = m->value("artifact_digest", "");
        return !recorded.empty() && recorded == sf::sha256_file_hex(primary_output);
    }

    void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

    // Writes the manifest next to the primary output.
    void finish(const std::vector<std::pair<std::string, std::string>>& outputs) {
        json out_json;
        std::string primary_digest;
        for (const auto& [name, path] : outputs) {
            std::string digest = sf::sha256_file_hex(path);
            out_json[name] = {{"path", path}, {"digest", digest}};
            if (primary_digest.empty()) primary_digest = digest;
        }
        json m;
        m["command"] = command_;
        m["inputs"] = inputs_;
        m["params"] = params_;
        m["outputs"] = out_json;
        m["artifact_digest"] = primary_digest;
        json t;
        for (const auto& [k, v] : timings_) t[k] = v;
        t["total"] = now_seconds() - start_;
        m["timings_seconds"] = t;
        std::ofstream out(manifest_path(outputs.front().second));
        if (!out) sf::fail(sf::Errc::io, "cannot write manifest for " + outputs.front().second);
        out << m.dump(2) << '\n';
    }

    const json& params() const { return params_; }

  private:
    static bool is_chained_name(const std::string& name) {
        static const char* kChained[] = {"medium", "diffuse_template", "highlight_template",
                                         "features", "dataset", "network"};
        for (const char* c : kChained)
            if (name == c) return true;
        return false;
    }

    void note_digest(const std::string& name, const std::string& digest,
                     const std::string& source) {
        if (!is_chained_name(name)) return;
        auto [it, inserted] = chain_.emplace(name, std::make_pair(digest, source));
        if (!inserted && it->second.first != digest)
            sf::fail(sf::Errc::provenance_mismatch,
                     command_ + ": '" + name + "' digest from " + source +
                         " conflicts with " + it->second.second);
    }

    std::string command_;
    json params_;
    json inputs_ = json::object();
    std::map<std::string, std::pair<std::string, std::string>> chain_;
    std::map<std::string, double> timings_;
    double start_;
};

// One command per workspace directory at a time.
class WorkspaceLock {
  public:
    explicit WorkspaceLock(const std::string& primary_output) {
        std::filesystem::path dir =
            std::filesystem::absolute(primary_output).parent_path();
        std::filesystem::create_directories(dir);
        path_ = (dir / ".scatterfield.lock").string();
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) sf::fail(sf::Errc::io, "cannot open lock file " + path_);
        if (::flock(fd_, LOCK_EX | LOCK_NB) != 0)
            sf::fail(sf::Errc::invalid_argument,
                     "workspace is busy (another command holds " + path_ + ")");
    }
    ~WorkspaceLock() {
        if (fd_ >= 0) ::close(fd_);
    }
    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

  private:
    std::string path_;
    int fd_ = -1;
};

json vec3_json(const sf::Vec3& v) { return json::array({v.x, v.y, v.z}); }

void write_images(const sf::ImageF& img, const std::string& pfm_path,
                  const std::string& ppm_path) {
    for (float v : img.rgb)
        if (!std::isfinite(v)) sf::fail(sf::Errc::numeric, "render produced non-finite pixels");
    sf::write_pfm(img, pfm_path);
    if (!ppm_path.empty()) sf::write_ppm(img, ppm_path);
}

// ---------------------------------------------------------------- stages ---

int cmd_gen_medium(const std::string& kind, int dims, uint64_t seed,
                   const std::string& out) {
    WorkspaceLock lock(out);
    Stage stage("gen-medium", {{"kind", kind}, {"dims", dims}, {"seed", seed}});
    if (stage.cache_hit(out)) {
        std::printf("gen-medium: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::DensityGrid grid = sf::generate_medium(sf::medium_kind_from_name(kind), dims, seed);
    sf::save_density(grid, out);
    stage.finish({{"medium", out}});
    std::printf("gen-medium: wrote %s (%d^3)\n", out.c_str(), dims);
    return kExitOk;
}

int cmd_build_pyramid(const std::string& medium, const std::string& out_prefix) {
    WorkspaceLock lock(out_prefix + "_level0.vgrid");
    Stage stage("build-pyramid", json::object());
    stage.input("medium", medium);
    std::string primary = out_prefix + "_level0.vgrid";
    if (stage.cache_hit(primary)) {
        std::printf("build-pyramid: %s is up to date\n", primary.c_str());
        return kExitOk;
    }
    sf::DensityGrid grid = sf::load_density(medium);
    sf::DensityPyramid pyramid(grid);
    std::vector<std::pair<std::string, std::string>> outputs;
    for (int i = 0; i < pyramid.level_count(); ++i) {
        std::string path = out_prefix + "_level" + std::to_string(i) + ".vgrid";
        sf::save_density(pyramid.level(i), path);
        outputs.push_back({"level" + std::to_string(i), path});
    }
    stage.finish(outputs);
    std::printf("build-pyramid: %d levels under %s_level*.vgrid\n",
                pyramid.level_count(), out_prefix.c_str());
    return kExitOk;
}

int cmd_gen_template(const std::string& kind, uint64_t seed, double cone_length,
                     double cone_angle_deg, const std::string& out) {
    WorkspaceLock lock(out);
    json params = {{"kind", kind}, {"seed", seed}};
    if (kind == "highlight") {
        params["cone_length"] = cone_length;
        params["cone_angle_deg"] = cone_angle_deg;
    }
    Stage stage("gen-template", params);
    if (stage.cache_hit(out)) {
        std::printf("gen-template: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::SamplingTemplate tmpl;
    if (kind == "diffuse") {
        tmpl = sf::generate_diffuse_template(sf::diffuse_default_counts(), seed);
    } else if (kind == "highlight") {
        tmpl = sf::generate_highlight_template(sf::highlight_default_counts(), cone_length,
                                               cone_angle_deg * sf::kPi / 180.0, seed);
    } else {
        sf::fail(sf::Errc::invalid_argument, "template kind must be diffuse or highlight");
    }
    sf::save_template(tmpl, out);
    stage.finish({{kind + "_template", out}});
    std::printf("gen-template: wrote %s (%d points)\n", out.c_str(), tmpl.total_points());
    return kExitOk;
}

int cmd_precompute(const std::string& scene_path, int center_count, uint64_t seed,
                   const std::string& out) {
    WorkspaceLock lock(out);
    Scene scene = load_scene(scene_path);
    if (scene.diffuse_template_path.empty() || scene.highlight_template_path.empty())
        sf::fail(sf::Errc::invalid_argument, "scene must set paths.diffuse_template and paths.highlight_template");
    Stage stage("precompute",
                {{"centers", center_count},
                 {"seed", seed},
                 {"light", vec3_json(scene.light.direction)},
                 {"template_scale", scene.template_scale},
                 {"step_scale", scene.step_scale}});
    stage.input("scene", scene_path, /*chained=*/false);
    stage.input("medium", scene.medium_path);
    stage.input("diffuse_template", scene.diffuse_template_path);
    stage.input("highlight_template", scene.highlight_template_path);
    if (stage.cache_hit(out)) {
        std::printf("precompute: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::Medium medium = load_medium(scene);
    sf::SamplingTemplate dt = sf::load_template(scene.diffuse_template_path);
    sf::SamplingTemplate ht = sf::load_template(scene.highlight_template_path);
    sf::DensityPyramid pyramid(medium.grid);
    std::vector<sf::CenterSpec> centers =
        sf::draw_centers(medium.grid, center_count, seed, scene.light.direction);
    sf::FeatureConfig fcfg;
    fcfg.step_scale = scene.step_scale;
    fcfg.template_scale = scene.template_scale;
    double t0 = now_seconds();
    sf::FeatureTable table =
        sf::precompute_tables(medium.grid, pyramid, dt, ht, centers, medium.phase, fcfg);
    stage.timing("precompute", now_seconds() - t0);
    sf::save_feature_table(table, out);
    stage.finish({{"features", out}});
    std::printf("precompute: %zu centers -> %s\n", centers.size(), out.c_str());
    return kExitOk;
}

int cmd_gen_dataset(const std::string& scene_path, const std::string& features,
                    int spp, uint64_t seed, const std::string& out) {
    WorkspaceLock lock(out);
    Scene scene = load_scene(scene_path);
    Stage stage("gen-dataset",
                {{"spp", spp},
                 {"seed", seed},
                 {"light", vec3_json(scene.light.direction)},
                 {"albedo", vec3_json(scene.props.albedo)},
                 {"sigma_t", vec3_json(scene.props.sigma_t_scale)}});
    stage.input("scene", scene_path, /*chained=*/false);
    stage.input("medium", scene.medium_path);
    stage.input("features", features);
    if (stage.cache_hit(out)) {
        std::printf("gen-dataset: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::Medium medium = load_medium(scene);
    sf::FeatureTable table = sf::load_feature_table(features);
    // The feature table fixes the centers; labels attach to the same
    // (p, omega, light) triples its blocks recorded.
    std::vector<sf::CenterSpec> centers;
    centers.reserve(table.diffuse.size());
    for (const sf::SampleFeatureBlock& b : table.diffuse)
        centers.push_back({b.p, b.omega, b.light});
    sf::DatasetOptions opts;
    opts.spp = spp;
    opts.seed = seed;
    opts.trace.step_scale = scene.step_scale;
    double t0 = now_seconds();
    sf::DatasetZ data = sf::generate_dataset(medium, scene.light, table, centers, opts);
    stage.timing("labels", now_seconds() - t0);
    sf::save_dataset(data, out);
    stage.finish({{"dataset", out}});
    std::printf("gen-dataset: %zu labels (%d flagged) -> %s\n", data.entries.size(),
                int(data.manifest.value("flagged_entries", 0)), out.c_str());
    return kExitOk;
}

int cmd_train(const std::string& scene_path, const std::string& dataset_path, int steps,
              int batch, double lr, uint64_t seed, const std::string& loss_csv,
              const std::string& out) {
    WorkspaceLock lock(out);
    Scene scene = load_scene(scene_path);
    Stage stage("train", {{"steps", steps},
                          {"batch", batch},
                          {"lr", lr},
                          {"seed", seed},
                          {"albedo", vec3_json(scene.props.albedo)}});
    stage.input("scene", scene_path, /*chained=*/false);
    stage.input("dataset", dataset_path);
    if (stage.cache_hit(out)) {
        std::printf("train: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::DatasetZ data = sf::load_dataset(dataset_path);
    sf::BackboneConfig bc;
    bc.seed = seed;
    sf::Backbone<float> net = sf::make_backbone<float>(bc);
    sf::TrainOptions topts;
    topts.steps = steps;
    topts.batch = batch;
    topts.adam.lr = lr;
    topts.seed = seed;
    topts.loss_csv_path = loss_csv;
    double t0 = now_seconds();
    sf::TrainResult result = sf::train_backbone(net, data, scene.props, scene.phase, topts);
    stage.timing("train", now_seconds() - t0);
    sf::save_backbone(net, out);
    std::vector<std::pair<std::string, std::string>> outputs = {{"network", out}};
    if (!loss_csv.empty()) outputs.push_back({"loss_csv", loss_csv});
    stage.finish(outputs);
    std::printf("train: loss %.6f -> %.6f over %d steps (val %.6f, %zu/%zu split) -> %s\n",
                result.initial_train_loss, result.final_train_loss, steps,
                result.final_val_loss, result.train_count, result.val_count, out.c_str());
    return kExitOk;
}

int cmd_render(const std::string& scene_path, const std::string& mode,
               const std::string& net_path, const std::string& features, int spp,
               uint64_t seed, const std::string& out, const std::string& ppm) {
    WorkspaceLock lock(out);
    Scene scene = load_scene(scene_path);
    json params = {{"mode", mode},
                   {"seed", seed},
                   {"step_scale", scene.step_scale},
                   {"camera", {{"position", vec3_json(scene.cam_position)},
                               {"look_at", vec3_json(scene.cam_look_at)},
                               {"vfov", scene.cam_vfov},
                               {"width", scene.cam_width},
                               {"height", scene.cam_height}}},
                   {"light", vec3_json(scene.light.direction)},
                   {"albedo", vec3_json(scene.props.albedo)},
                   {"sigma_t", vec3_json(scene.props.sigma_t_scale)}};
    if (mode == "reference") params["spp"] = spp;
    Stage stage("render-" + mode, params);
    stage.input("scene", scene_path, /*chained=*/false);
    stage.input("medium", scene.medium_path);
    if (mode == "neural") {
        if (net_path.empty() || features.empty())
            sf::fail(sf::Errc::invalid_argument, "render --mode neural needs --net and --features");
        if (scene.diffuse_template_path.empty() || scene.highlight_template_path.empty())
            sf::fail(sf::Errc::invalid_argument, "scene must set template paths for neural mode");
        stage.input("network", net_path);
        stage.input("features", features);
        stage.input("diffuse_template", scene.diffuse_template_path);
        stage.input("highlight_template", scene.highlight_template_path);
    }
    if (stage.cache_hit(out)) {
        std::printf("render: %s is up to date\n", out.c_str());
        return kExitOk;
    }
    sf::Medium medium = load_medium(scene);
    sf::Camera camera(scene.cam_position, scene.cam_look_at, scene.cam_up, scene.cam_vfov,
                      scene.cam_width, scene.cam_height);
    sf::RenderOptions ropts;
    ropts.step_scale = scene.step_scale;
    double t0 = now_seconds();
    sf::ImageF img;
    if (mode == "reference") {
        img = sf::render_reference(medium, scene.light, camera, spp, seed, ropts);
    } else if (mode == "single-scatter") {
        img = sf::render_single_scatter(medium, scene.light, camera, ropts);
    } else if (mode == "neural") {
        sf::Backbone<float> net = sf::load_backbone(net_path);
        sf::FeatureTable table = sf::load_feature_table(features);
        sf::SamplingTemplate dt = sf::load_template(scene.diffuse_template_path);
        sf::SamplingTemplate ht = sf::load_template(scene.highlight_template_path);
        sf::FeatureConfig fcfg;
        fcfg.step_scale = scene.step_scale;
        img = sf::render_neural(medium, scene.light, camera, net, table, dt, ht, fcfg, ropts);
    } else {
        sf::fail(sf::Errc::invalid_argument, "render mode must be reference, single-scatter, or neural");
    }
    stage.timing("render", now_seconds() - t0);
    write_images(img, out, ppm);
    std::vector<std::pair<std::string, std::string>> outputs = {{"image", out}};
    if (!ppm.empty()) outputs.push_back({"preview", ppm});
    stage.finish(outputs);
    std::printf("render: %s (%dx%d, %s) in %.2f s\n", out.c_str(), scene.cam_width,
                scene.cam_height, mode.c_str(), now_seconds() - t0);
    return kExitOk;
}

int cmd_compare(const std::string& path_a, const std::string& path_b,
                const std::string& out) {
    WorkspaceLock lock(out);
    Stage stage("compare", json::object());
    stage.input("image_a", path_a, /*chained=*/false);
    stage.input("image_b", path_b, /*chained=*/false);
    // Renders of different media or networks must not be compared;
    // their manifests carry the chain.
    std::optional<json> ma = load_manifest(path_a);
    std::optional<json> mb = load_manifest(path_b);
    if (ma && mb) {
        for (const char* key : {"medium"}) {
            const json& ia = (*ma)["inputs"];
            const json& ib = (*mb)["inputs"];
            if (ia.contains(key) && ib.contains(key) &&
                ia[key]["digest"] != ib[key]["digest"])
                sf::fail(sf::Errc::provenance_mismatch,
                         std::string("compare: images disagree on '") + key + "' provenance");
        }
    }
    sf::ImageF a = sf::read_pfm(path_a);
    sf::ImageF b = sf::read_pfm(path_b);
    if (a.width != b.width || a.height != b.height)
        sf::fail(sf::Errc::shape_mismatch, "compare: image dimensions differ");

    // Linear-radiance metrics, image B as the reference.
    double sq_diff = 0.0, sq_ref = 0.0, max_err = 0.0;
    double mae[3] = {0.0, 0.0, 0.0};
    size_t n = a.rgb.size() / 3;
    for (size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            double av = a.rgb[3 * i + size_t(c)], bv = b.rgb[3 * i + size_t(c)];
            double d = av - bv;
            sq_diff += d * d;
            sq_ref += bv * bv;
            mae[c] += std::fabs(d);
            max_err = std::max(max_err, std::fabs(d));
        }
    double rmse = std::sqrt(sq_diff / double(3 * n));
    double rms_ref = std::sqrt(sq_ref / double(3 * n));
    double rel_rmse = rms_ref > 0.0 ? rmse / rms_ref : rmse;

    json report;
    report["relative_rmse"] = rel_rmse;
    report["rmse"] = rmse;
    report["mean_absolute_error"] = {mae[0] / double(n), mae[1] / double(n), mae[2] / double(n)};
    report["max_error"] = max_err;
    json runtimes = json::object();
    if (ma) runtimes["image_a"] = (*ma).value("timings_seconds", json::object());
    if (mb) runtimes["image_b"] = (*mb).value("timings_seconds", json::object());
    report["runtime_per_stage"] = runtimes;
    {
        std::ofstream rep(out);
        if (!rep) sf::fail(sf::Errc::io, "cannot write " + out);
        rep << report.dump(2) << '\n';
    }
    stage.finish({{"report", out}});
    std::printf("compare %s vs %s\n", path_a.c_str(), path_b.c_str());
    std::printf("  %-22s %.6f\n", "relative RMSE", rel_rmse);
    std::printf("  %-22s %.6f\n", "RMSE", rmse);
    std::printf("  %-22s %.6f %.6f %.6f\n", "MAE (r g b)", mae[0] / double(n),
                mae[1] / double(n), mae[2] / double(n));
    std::printf("  %-22s %.6f\n", "max error", max_err);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scatterfield volumetric scattering pipeline"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap worker threads (default SCATTERFIELD_THREADS)");

    // gen-medium
    std::string gm_kind = "cube", gm_out;
    int gm_dims = 32;
    uint64_t gm_seed = 1;
    CLI::App* gm = app.add_subcommand("gen-medium", "generate a procedural density grid");
    gm->add_option("--kind", gm_kind, "cube | slab | procedural-cloud");
    gm->add_option("--dims", gm_dims, "grid resolution (power of two)");
    gm->add_option("--seed", gm_seed, "noise seed");
    gm->add_option("--out", gm_out, "output .vgrid")->required();

    // build-pyramid
    std::string bp_medium, bp_prefix;
    CLI::App* bp = app.add_subcommand("build-pyramid", "write the density mip pyramid");
    bp->add_option("--medium", bp_medium, "input .vgrid")->required();
    bp->add_option("--out-prefix", bp_prefix, "output prefix for level grids")->required();

    // gen-template
    std::string gt_kind = "diffuse", gt_out;
    uint64_t gt_seed = 1;
    double gt_cone_length = 1.0, gt_cone_angle = 5.0;
    CLI::App* gt = app.add_subcommand("gen-template", "generate a sampling template");
    gt->add_option("--kind", gt_kind, "diffuse | highlight");
    gt->add_option("--seed", gt_seed, "generator seed");
    gt->add_option("--cone-length", gt_cone_length, "highlight: segment length");
    gt->add_option("--cone-angle-deg", gt_cone_angle, "highlight: cone half-angle");
    gt->add_option("--out", gt_out, "output .vtmpl")->required();

    // precompute
    std::string pc_scene, pc_out;
    int pc_centers = 512;
    uint64_t pc_seed = 1;
    CLI::App* pc = app.add_subcommand("precompute", "sample feature tables at centers");
    pc->add_option("--scene", pc_scene, "scene JSON")->required();
    pc->add_option("--centers", pc_centers, "number of template centers");
    pc->add_option("--seed", pc_seed, "center placement seed");
    pc->add_option("--out", pc_out, "output .vfeat")->required();

    // gen-dataset
    std::string gd_scene, gd_features, gd_out;
    int gd_spp = 1024;
    uint64_t gd_seed = 1;
    CLI::App* gd = app.add_subcommand("gen-dataset", "label feature centers with the oracle");
    gd->add_option("--scene", gd_scene, "scene JSON")->required();
    gd->add_option("--features", gd_features, "input .vfeat")->required();
    gd->add_option("--spp", gd_spp, "oracle samples per label");
    gd->add_option("--seed", gd_seed, "oracle seed");
    gd->add_option("--out", gd_out, "output .vdata")->required();

    // train
    std::string tr_scene, tr_dataset, tr_out, tr_csv;
    int tr_steps = 2000, tr_batch = 64;
    double tr_lr = 1e-3;
    uint64_t tr_seed = 1;
    CLI::App* tr = app.add_subcommand("train", "train the scatter predictor");
    tr->add_option("--scene", tr_scene, "scene JSON")->required();
    tr->add_option("--dataset", tr_dataset, "input .vdata")->required();
    tr->add_option("--steps", tr_steps, "optimizer steps");
    tr->add_option("--batch", tr_batch, "batch size");
    tr->add_option("--lr", tr_lr, "learning rate");
    tr->add_option("--seed", tr_seed, "init/shuffle seed");
    tr->add_option("--loss-csv", tr_csv, "per-step loss curve CSV");
    tr->add_option("--out", tr_out, "output .vnet")->required();

    // render
    std::string rd_scene, rd_mode = "reference", rd_net, rd_features, rd_out, rd_ppm;
    int rd_spp = 64;
    uint64_t rd_seed = 1;
    CLI::App* rd = app.add_subcommand("render", "render the scene");
    rd->add_option("--scene", rd_scene, "scene JSON")->required();
    rd->add_option("--mode", rd_mode, "reference | single-scatter | neural");
    rd->add_option("--net", rd_net, "trained .vnet (neural mode)");
    rd->add_option("--features", rd_features, ".vfeat with phase table (neural mode)");
    rd->add_option("--spp", rd_spp, "oracle samples per march point (reference mode)");
    rd->add_option("--seed", rd_seed, "oracle seed");
    rd->add_option("--out", rd_out, "output .pfm")->required();
    rd->add_option("--ppm", rd_ppm, "optional tone-mapped .ppm preview");

    // compare
    std::string cp_a, cp_b, cp_out = "compare.json";
    CLI::App* cp = app.add_subcommand("compare", "compare two linear images");
    cp->add_option("a", cp_a, "image A (.pfm)")->required();
    cp->add_option("b", cp_b, "image B (.pfm), treated as reference")->required();
    cp->add_option("--out", cp_out, "report JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (threads > 0) sf::set_thread_cap(threads);

    try {
        if (gm->parsed()) return cmd_gen_medium(gm_kind, gm_dims, gm_seed, gm_out);
        if (bp->parsed()) return cmd_build_pyramid(bp_medium, bp_prefix);
        if (gt->parsed())
            return cmd_gen_template(gt_kind, gt_seed, gt_cone_length, gt_cone_angle, gt_out);
        if (pc->parsed()) return cmd_precompute(pc_scene, pc_centers, pc_seed, pc_out);
        if (gd->parsed()) return cmd_gen_dataset(gd_scene, gd_features, gd_spp, gd_seed, gd_out);
        if (tr->parsed())
            return cmd_train(tr_scene, tr_dataset, tr_steps, tr_batch, tr_lr, tr_seed,
                             tr_csv, tr_out);
        if (rd->parsed())
            return cmd_render(rd_scene, rd_mode, rd_net, rd_features, rd_spp, rd_seed,
                              rd_out, rd_ppm);
        if (cp->parsed()) return cmd_compare(cp_a, cp_b, cp_out);
    } catch (const sf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.code()) {
            case sf::Errc::provenance_mismatch: return kExitProvenance;
            case sf::Errc::numeric: return kExitNumeric;
            default: return kExitValidation;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
