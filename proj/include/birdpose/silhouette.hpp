#pragma once

#include <vector>

#include "birdpose/common.hpp"
#include "birdpose/skeleton.hpp"

namespace birdpose {

// Occupancy in [0, 1] sampled at pixel centres.
using SoftSilhouette = Grid<double>;

// Logistic slope per pixel; the 10-90% edge band is 2 ln 9 / sharpness ~ 2 px wide.
inline constexpr double kDefaultSharpness = 2.2;

// Bone occupancy below sigmoid(-kOccupancyCutoff) is treated as exactly zero, above sigmoid(kOccupancyCutoff) as one.
inline constexpr double kOccupancyCutoff = 20.0;

// One bone projected to the image: a 2D segment with a pixel radius.
struct ProjectedCapsule {
    int joint = 0;  // child joint of the bone
    int parent = 0;
    Eigen::Vector2d a;  // parent end, pixels
    Eigen::Vector2d b;  // child end, pixels
    double radius = 0.0;
    double reach = 0.0;  // radius plus the cutoff margin, pixels
    // Inclusive pixel window outside which the bone's occupancy is below the cutoff.
    int col_lo = 0, col_hi = -1, row_lo = 0, row_hi = -1;
};

// Inclusive column range of `row` (within the bone's window) whose pixel centres may lie
// within `reach` of the segment. Returns false when the row misses the bone entirely.
bool capsule_row_span(const ProjectedCapsule& c, int row, int& col_lo, int& col_hi);

std::vector<ProjectedCapsule> project_capsules(const SkeletonModel& model, const Kinematics& kin, double sigma,
                                               const Camera& camera, double sharpness);

// Per-pixel probabilistic union 1 - prod(1 - p_b) of logistic capsule occupancies
// p_b = sigmoid(sharpness * (radius_b - distance to segment_b)).
SoftSilhouette render_soft_silhouette(const SkeletonModel& model, const PoseParams& pose, const Camera& camera,
                                      double sharpness = kDefaultSharpness);

// Occupancy of the single bone ending at `joint`.
SoftSilhouette render_bone_occupancy(const SkeletonModel& model, const PoseParams& pose, const Camera& camera,
                                     int joint, double sharpness = kDefaultSharpness);

// Mean absolute difference between the rendered silhouette and `target`,
// plus its gradient with respect to the 3D joint positions and the bone scale.
struct MaskLossGradient {
    double value = 0.0;
    Points3 grad_joints;
    double grad_sigma = 0.0;
};

MaskLossGradient mask_loss_with_gradient(const SkeletonModel& model, const Kinematics& kin, double sigma,
                                         const Camera& camera, double sharpness, const BinaryMask& target);

}  // namespace birdpose
