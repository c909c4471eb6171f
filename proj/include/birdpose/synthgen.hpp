#pragma once

#include <cstdint>
#include <vector>

#include "birdpose/common.hpp"
#include "birdpose/skeleton.hpp"

namespace birdpose {

// Smooth random motion plus detector-style corruption. Angles in radians, distances in image pixels.
struct MotionSpec {
    // Per-frame Gaussian step sizes of the random walks (before smoothing).
    double pose_step = 0.03;         // each theta_p component
    double yaw_step = 0.04;          // theta_g about the optical axis
    double tilt_step = 0.01;         // theta_g about the image axes
    double translation_step = 1.0;   // root, pixels
    double scale_step = 0.0;         // sigma
    double smoothing = 3.0;          // Gaussian low-pass std, frames; 0 disables

    double initial_pose_spread = 0.15;  // std of the starting theta_p around the prior mean
    double initial_sigma = 1.0;
    Eigen::Vector2d initial_offset = Eigen::Vector2d::Zero();  // root offset from the principal point, pixels
    bool random_initial_yaw = true;
    double initial_yaw = 0.0;  // used when random_initial_yaw is false

    double keypoint_noise = 0.0;     // Gaussian std per coordinate, pixels
    double outlier_probability = 0.0;
    double outlier_magnitude = 40.0;  // displacement length of an outlier, pixels
    double inlier_confidence_min = 0.6;
    double inlier_confidence_max = 1.0;
    double outlier_confidence_min = 0.05;
    double outlier_confidence_max = 0.3;

    double mask_sharpness = 2.2;  // ground-truth mask = soft silhouette > 0.5

    void validate() const;
};

struct SyntheticSequence {
    std::vector<PoseParams> poses;
    std::vector<Points2> truth;                   // exact projections of the model keypoints
    std::vector<KeypointSet> keypoints;           // corrupted detections
    std::vector<std::vector<bool>> outliers;      // per frame and keypoint
    std::vector<BinaryMask> masks;                // camera-sized ground-truth silhouettes
    std::vector<BBox> bboxes;                     // tight mask boxes
    std::vector<bool> missing;                    // mask left the image
};

SyntheticSequence generate_trajectory(const SkeletonModel& model, const Camera& camera, int frames,
                                      const MotionSpec& spec, std::uint64_t seed);

// Multi-bird scene for `synth` and synthetic grids: birds spread horizontally around the image centre.
struct SynthConfig {
    int frames = 100;
    int birds = 1;
    int width = 384;
    int height = 384;
    double bird_spacing = 150.0;  // pixels between neighbouring birds' start positions
    std::uint64_t seed = 1;
    MotionSpec motion;

    SynthConfig();
    void validate() const;
    Camera camera() const;  // scene camera, principal point at the image centre
};

// Bird b starts bird_spacing * (b - (birds - 1) / 2) pixels right of the centre and uses seed + b.
std::vector<SyntheticSequence> generate_scene(const SkeletonModel& model, const SynthConfig& config,
                                              std::uint64_t seed);

// Low-pass filter used for the random walks: Gaussian kernel truncated at 3 std, renormalized at the ends.
std::vector<double> gaussian_smooth(const std::vector<double>& signal, double std_frames);

}  // namespace birdpose
