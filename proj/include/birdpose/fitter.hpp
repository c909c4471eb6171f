#pragma once

#include <optional>
#include <span>
#include <vector>

#include "birdpose/losses.hpp"
#include "birdpose/observation.hpp"
#include "birdpose/optimizer.hpp"
#include "birdpose/skeleton.hpp"

namespace birdpose {

inline constexpr int kInitCandidates = 30;  // 360 degrees in 12 degree steps

struct FitConfig {
    int window_size = 100;
    LossWeights weights;  // lambda_vel / lambda_acc live here
    bool use_median_filter = false;
    int median_window = 5;
    bool common_size = false;  // one bone scale per window
    int stage1_iters = 600;
    int stage2_iters = 400;
    AdamOptions adam;
    double sharpness = kDefaultSharpness;
    double stage1_lambda_msk = 0.0;  // mask weight during stage 1; stage 2 uses weights.lambda_msk

    void validate() const;
};

struct WindowDiagnostics {
    int first = 0;   // position of the window's first frame within the track
    int frames = 0;
    double initial_loss = 0.0;  // full stage-2 objective at the initialization
    double final_loss = 0.0;
    ObjectiveTerms initial_terms;
    ObjectiveTerms final_terms;
    std::vector<double> loss_trace;  // objective value at every iteration, stage 1 then stage 2
};

struct FitResult {
    std::vector<PoseParams> poses;
    std::vector<Points2> projected_keypoints;  // crop space
    std::vector<WindowDiagnostics> windows;
};

struct InitCandidate {
    double yaw = 0.0;  // radians
    PoseParams pose;
    double loss = 0.0;
};

// The 30 top-view yaw candidates of the rest pose, each scaled and centred on the confident keypoints.
std::vector<InitCandidate> init_candidates(const SkeletonModel& model, const Camera& camera,
                                           const ObservationFrame& obs, double gm_sigma = 50.0);

// Lowest keypoint loss candidate. Throws Uninitializable when no keypoint has positive confidence.
PoseParams initialize(const SkeletonModel& model, const Camera& camera, const ObservationFrame& obs,
                      double gm_sigma = 50.0);

// Initial poses for a window: the first usable frame is swept, the others inherit its orientation and
// scale and are re-centred on their own keypoints.
std::vector<PoseParams> initialize_window(const SkeletonModel& model, const Camera& camera,
                                          std::span<const ObservationFrame> observations, double gm_sigma = 50.0);

// Two-stage optimization of one window. `init` overrides the default initialization. Returns the lowest
// full-objective state among the initialization, the stage-2 iterates and the last iterate, so
// final_loss <= initial_loss.
FitResult fit_window(const SkeletonModel& model, const Camera& camera, std::span<const ObservationFrame> observations,
                     const FitConfig& config, std::optional<std::span<const PoseParams>> init = std::nullopt);

// Median-filters the track (if enabled) and fits consecutive non-overlapping windows independently.
FitResult fit_track(const SkeletonModel& model, const Camera& camera, std::span<const ObservationFrame> observations,
                    const FitConfig& config);

// Applies the weighted median filter to the keypoints of the present (non-missing) frames.
std::vector<ObservationFrame> median_filter_observations(std::span<const ObservationFrame> observations,
                                                         int window = 5);

}  // namespace birdpose
