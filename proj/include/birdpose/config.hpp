#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "birdpose/fitter.hpp"
#include "birdpose/preprocess.hpp"
#include "birdpose/synthgen.hpp"
#include "birdpose/tracker.hpp"

namespace birdpose {

inline constexpr const char* kConfigEnvVar = "BIRDPOSE_CONFIG";

struct AppConfig {
    std::string model;  // model file; empty selects the built-in bird
    Camera camera;      // crop-space fitting camera
    FitConfig fit;
    CropOptions crop;
    TrackerOptions tracker;
    SynthConfig synth;
    int threads = 1;  // grid worker count

    void validate() const;
};

// Unknown keys and wrong types are Parse errors naming the JSON path; absent keys keep defaults.
AppConfig config_from_json(std::string_view text);
std::string config_to_json(const AppConfig& config);

// Path precedence: explicit, then $BIRDPOSE_CONFIG, then ./birdpose.json if it exists; nullopt means defaults.
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path);
AppConfig load_config(const std::optional<std::filesystem::path>& explicit_path);

SkeletonModel load_app_model(const AppConfig& config);

}  // namespace birdpose
