#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "birdpose/common.hpp"

namespace birdpose {

struct Joint {
    std::string name;
    int parent = -1;  // -1 for the root
};

struct KeypointAttachment {
    std::string name;
    int joint = 0;
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();  // in the attached joint's frame
};

// Articulated bird template. Joints are stored in topological order (parent < child),
// joint 0 is the root. Bone j (j >= 1) runs from parent(j) to j.
struct SkeletonModel {
    std::vector<Joint> joints;
    std::vector<Eigen::Vector3d> rest_offsets;      // per joint, in the parent frame; root entry unused
    std::vector<KeypointAttachment> keypoints;
    std::vector<double> bone_radii;                 // per joint; root entry unused
    Eigen::VectorXd pose_prior_mean;                // 3 * (J - 1)
    Eigen::MatrixXd pose_prior_cov_inv;             // SPD, 3(J-1) x 3(J-1)

    int num_joints() const { return static_cast<int>(joints.size()); }
    int num_keypoints() const { return static_cast<int>(keypoints.size()); }
    int pose_dim() const { return 3 * (num_joints() - 1); }

    // Throws Error(Validation) naming the violated invariant.
    void validate() const;
};

// Layout of the flattened per-frame parameter vector.
namespace pose_layout {
inline constexpr int kKappa = 0;
inline constexpr int kSigma = 2;
inline constexpr int kThetaGlobal = 3;
inline constexpr int kThetaPose = 6;
inline constexpr int size(int pose_dim) { return kThetaPose + pose_dim; }
}  // namespace pose_layout

struct PoseParams {
    Eigen::Vector2d kappa = Eigen::Vector2d::Zero();
    double sigma = 1.0;
    Eigen::Vector3d theta_g = Eigen::Vector3d::Zero();
    Eigen::VectorXd theta_p;

    static PoseParams rest(const SkeletonModel& model);

    Eigen::VectorXd flatten() const;
    static PoseParams unflatten(const Eigen::VectorXd& flat);

    bool finite() const;

    friend bool operator==(const PoseParams& a, const PoseParams& b) {
        return a.kappa == b.kappa && a.sigma == b.sigma && a.theta_g == b.theta_g && a.theta_p == b.theta_p;
    }
};

// Simple pinhole camera looking down +z; the bird root sits at depth `fixed_depth`.
struct Camera {
    double focal = 1000.0;
    Eigen::Vector2d principal{128.0, 128.0};
    double fixed_depth = 5.0;
    int width = 256;
    int height = 256;

    void validate() const;
    // Pixels per model unit at the root plane.
    double pixels_per_unit() const { return focal / fixed_depth; }
};

struct Kinematics {
    Points3 joints;                            // J x 3, root at (kappa, 0)
    Points3 keypoints;                         // K x 3
    std::vector<Eigen::Matrix3d> local_rot;    // R(theta) per joint; root holds R(theta_g)
    std::vector<Eigen::Matrix3d> world_rot;    // accumulated rotation per joint
};

Kinematics forward_kinematics(const SkeletonModel& model, const PoseParams& pose);

// Reverse pass: given dL/d(joint positions) and dL/d(keypoint positions), returns
// dL/d(flattened pose) in pose_layout order.
Eigen::VectorXd forward_kinematics_backward(const SkeletonModel& model, const PoseParams& pose,
                                            const Kinematics& kin, const Points3& grad_joints,
                                            const Points3& grad_keypoints);

// Pinhole projection, pixel = focal * (x, y) / (z + fixed_depth) + principal.
Points2 project(const Camera& camera, const Points3& points);

// dL/d(points) from dL/d(pixels).
Points3 project_backward(const Camera& camera, const Points3& points, const Points2& grad_pixels);

// Throws if the pose does not fit the model (dimension, sigma, finiteness).
void check_pose(const SkeletonModel& model, const PoseParams& pose);

// Bird-like template: head-neck-spine-tail chain, two wing chains, two leg chains, 20 keypoints.
// Its pose prior is a diagonal surrogate.
SkeletonModel default_bird_model();

}  // namespace birdpose
