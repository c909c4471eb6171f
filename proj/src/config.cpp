#include "birdpose/config.hpp"

#include <array>
#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "birdpose/io.hpp"

namespace birdpose {

using nlohmann::json;

void AppConfig::validate() const {
    camera.validate();
    fit.validate();
    crop.validate();
    if (camera.width != crop.crop_size || camera.height != crop.crop_size) {
        throw Error(ErrorKind::Validation, "camera", "camera image size must equal crop.crop_size");
    }
    Tracker check(tracker);
    synth.validate();
    if (threads < 1) throw Error(ErrorKind::Validation, "threads", "threads must be >= 1");
}

namespace {

// Object reader that rejects unknown keys and reports JSON paths in errors.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw Error(ErrorKind::Parse, path_.empty() ? "config" : path_, "expected an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::Parse, name(key), "wrong value type");
        }
    }

    void get(const char* key, Eigen::Vector2d& out) {
        std::array<double, 2> v{out.x(), out.y()};
        get(key, v);
        out = {v[0], v[1]};
    }

    Section child(const char* key) {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, name(key));
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw Error(ErrorKind::Parse, name(k), "unknown key");
        }
    }

private:
    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_motion(Section s, MotionSpec& m) {
    s.get("pose_step", m.pose_step);
    s.get("yaw_step", m.yaw_step);
    s.get("tilt_step", m.tilt_step);
    s.get("translation_step", m.translation_step);
    s.get("scale_step", m.scale_step);
    s.get("smoothing", m.smoothing);
    s.get("initial_pose_spread", m.initial_pose_spread);
    s.get("initial_sigma", m.initial_sigma);
    s.get("initial_offset", m.initial_offset);
    s.get("random_initial_yaw", m.random_initial_yaw);
    s.get("initial_yaw", m.initial_yaw);
    s.get("keypoint_noise", m.keypoint_noise);
    s.get("outlier_probability", m.outlier_probability);
    s.get("outlier_magnitude", m.outlier_magnitude);
    s.get("inlier_confidence_min", m.inlier_confidence_min);
    s.get("inlier_confidence_max", m.inlier_confidence_max);
    s.get("outlier_confidence_min", m.outlier_confidence_min);
    s.get("outlier_confidence_max", m.outlier_confidence_max);
    s.get("mask_sharpness", m.mask_sharpness);
    s.finish();
}

json motion_json(const MotionSpec& m) {
    return {{"pose_step", m.pose_step},
            {"yaw_step", m.yaw_step},
            {"tilt_step", m.tilt_step},
            {"translation_step", m.translation_step},
            {"scale_step", m.scale_step},
            {"smoothing", m.smoothing},
            {"initial_pose_spread", m.initial_pose_spread},
            {"initial_sigma", m.initial_sigma},
            {"initial_offset", {m.initial_offset.x(), m.initial_offset.y()}},
            {"random_initial_yaw", m.random_initial_yaw},
            {"initial_yaw", m.initial_yaw},
            {"keypoint_noise", m.keypoint_noise},
            {"outlier_probability", m.outlier_probability},
            {"outlier_magnitude", m.outlier_magnitude},
            {"inlier_confidence_min", m.inlier_confidence_min},
            {"inlier_confidence_max", m.inlier_confidence_max},
            {"outlier_confidence_min", m.outlier_confidence_min},
            {"outlier_confidence_max", m.outlier_confidence_max},
            {"mask_sharpness", m.mask_sharpness}};
}

}  // namespace

AppConfig config_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, "config", e.what());
    }
    AppConfig c;
    Section root(doc, "");
    int version = kFormatVersion;
    root.get("version", version);
    if (version != kFormatVersion) {
        throw Error(ErrorKind::Parse, "version", "config version " + std::to_string(version) + " is not supported");
    }
    root.get("model", c.model);
    root.get("threads", c.threads);
    {
        Section s = root.child("camera");
        s.get("focal", c.camera.focal);
        s.get("principal", c.camera.principal);
        s.get("fixed_depth", c.camera.fixed_depth);
        s.get("width", c.camera.width);
        s.get("height", c.camera.height);
        s.finish();
    }
    {
        Section s = root.child("fit");
        FitConfig& f = c.fit;
        s.get("window_size", f.window_size);
        s.get("use_median_filter", f.use_median_filter);
        s.get("median_window", f.median_window);
        s.get("common_size", f.common_size);
        s.get("stage1_iters", f.stage1_iters);
        s.get("stage2_iters", f.stage2_iters);
        s.get("sharpness", f.sharpness);
        s.get("stage1_lambda_msk", f.stage1_lambda_msk);
        s.get("learning_rate", f.adam.learning_rate);
        s.get("beta1", f.adam.beta1);
        s.get("beta2", f.adam.beta2);
        s.get("epsilon", f.adam.epsilon);
        Section w = s.child("weights");
        w.get("lambda_kpt", f.weights.lambda_kpt);
        w.get("lambda_msk", f.weights.lambda_msk);
        w.get("lambda_pp", f.weights.lambda_pp);
        w.get("lambda_vel", f.weights.lambda_vel);
        w.get("lambda_acc", f.weights.lambda_acc);
        w.get("beta_g", f.weights.beta_g);
        w.get("beta_p", f.weights.beta_p);
        w.get("gm_sigma", f.weights.gm_sigma);
        w.finish();
        s.finish();
    }
    {
        Section s = root.child("crop");
        s.get("pad", c.crop.pad);
        s.get("dilation", c.crop.dilation);
        s.get("crop_size", c.crop.crop_size);
        s.finish();
    }
    {
        Section s = root.child("tracker");
        s.get("iou_threshold", c.tracker.iou_threshold);
        s.get("memory", c.tracker.memory);
        s.finish();
    }
    {
        Section s = root.child("synth");
        s.get("frames", c.synth.frames);
        s.get("birds", c.synth.birds);
        s.get("width", c.synth.width);
        s.get("height", c.synth.height);
        s.get("bird_spacing", c.synth.bird_spacing);
        s.get("seed", c.synth.seed);
        read_motion(s.child("motion"), c.synth.motion);
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

std::string config_to_json(const AppConfig& c) {
    const FitConfig& f = c.fit;
    const json doc = {
        {"version", kFormatVersion},
        {"model", c.model},
        {"threads", c.threads},
        {"camera",
         {{"focal", c.camera.focal},
          {"principal", {c.camera.principal.x(), c.camera.principal.y()}},
          {"fixed_depth", c.camera.fixed_depth},
          {"width", c.camera.width},
          {"height", c.camera.height}}},
        {"fit",
         {{"window_size", f.window_size},
          {"use_median_filter", f.use_median_filter},
          {"median_window", f.median_window},
          {"common_size", f.common_size},
          {"stage1_iters", f.stage1_iters},
          {"stage2_iters", f.stage2_iters},
          {"sharpness", f.sharpness},
          {"stage1_lambda_msk", f.stage1_lambda_msk},
          {"learning_rate", f.adam.learning_rate},
          {"beta1", f.adam.beta1},
          {"beta2", f.adam.beta2},
          {"epsilon", f.adam.epsilon},
          {"weights",
           {{"lambda_kpt", f.weights.lambda_kpt},
            {"lambda_msk", f.weights.lambda_msk},
            {"lambda_pp", f.weights.lambda_pp},
            {"lambda_vel", f.weights.lambda_vel},
            {"lambda_acc", f.weights.lambda_acc},
            {"beta_g", f.weights.beta_g},
            {"beta_p", f.weights.beta_p},
            {"gm_sigma", f.weights.gm_sigma}}}}},
        {"crop", {{"pad", c.crop.pad}, {"dilation", c.crop.dilation}, {"crop_size", c.crop.crop_size}}},
        {"tracker", {{"iou_threshold", c.tracker.iou_threshold}, {"memory", c.tracker.memory}}},
        {"synth",
         {{"frames", c.synth.frames},
          {"birds", c.synth.birds},
          {"width", c.synth.width},
          {"height", c.synth.height},
          {"bird_spacing", c.synth.bird_spacing},
          {"seed", c.synth.seed},
          {"motion", motion_json(c.synth.motion)}}}};
    return doc.dump(2) + "\n";
}

std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path) {
    if (explicit_path) return explicit_path;
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) return std::filesystem::path(env);
    if (std::filesystem::exists("birdpose.json")) return std::filesystem::path("birdpose.json");
    return std::nullopt;
}

AppConfig load_config(const std::optional<std::filesystem::path>& explicit_path) {
    const auto path = resolve_config_path(explicit_path);
    if (!path) return AppConfig{};
    try {
        return config_from_json(read_text(*path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io) throw;
        throw Error(e.kind(), path->string() + ":" + e.field(), e.message());
    }
}

SkeletonModel load_app_model(const AppConfig& config) {
    return config.model.empty() ? default_bird_model() : load_model(config.model);
}

}  // namespace birdpose
