#include "birdpose/skeleton.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "birdpose/rotation.hpp"

namespace birdpose {

namespace {

constexpr double kSpdTolerance = 1e-12;

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw Error(ErrorKind::Validation, field, message);
}

}  // namespace

void SkeletonModel::validate() const {
    const int n = num_joints();
    require(n >= 1, "joints", "model has no joints");
    require(joints[0].parent == -1, "joints", "joint 0 must be the root");
    for (int j = 1; j < n; ++j) {
        const int p = joints[j].parent;
        require(p >= 0, "joints", "more than one root (joint " + std::to_string(j) + ")");
        require(p < j, "joints", "joint " + std::to_string(j) + " is not in topological order");
    }
    require(static_cast<int>(rest_offsets.size()) == n, "rest_offsets", "expected one offset per joint");
    require(static_cast<int>(bone_radii.size()) == n, "bone_radii", "expected one radius per joint");
    for (int j = 1; j < n; ++j) {
        require(std::isfinite(bone_radii[j]) && bone_radii[j] >= 0.0, "bone_radii",
                "negative or non-finite radius at joint " + std::to_string(j));
        require(rest_offsets[j].allFinite(), "rest_offsets", "non-finite offset at joint " + std::to_string(j));
    }
    for (size_t k = 0; k < keypoints.size(); ++k) {
        require(keypoints[k].joint >= 0 && keypoints[k].joint < n, "keypoint_map",
                "keypoint " + std::to_string(k) + " references joint " + std::to_string(keypoints[k].joint));
    }
    const int d = pose_dim();
    require(pose_prior_mean.size() == d, "pose_prior_mean", "expected " + std::to_string(d) + " entries");
    require(pose_prior_cov_inv.rows() == d && pose_prior_cov_inv.cols() == d, "pose_prior_cov_inv",
            "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    if (d == 0) return;
    const double scale = std::max(1.0, pose_prior_cov_inv.cwiseAbs().maxCoeff());
    require((pose_prior_cov_inv - pose_prior_cov_inv.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale,
            "pose_prior_cov_inv", "matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pose_prior_cov_inv, Eigen::EigenvaluesOnly);
    require(eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > kSpdTolerance, "pose_prior_cov_inv",
            "matrix is not positive definite");
}

PoseParams PoseParams::rest(const SkeletonModel& model) {
    PoseParams p;
    p.theta_p = model.pose_prior_mean;
    return p;
}

Eigen::VectorXd PoseParams::flatten() const {
    Eigen::VectorXd v(pose_layout::size(static_cast<int>(theta_p.size())));
    v.segment<2>(pose_layout::kKappa) = kappa;
    v[pose_layout::kSigma] = sigma;
    v.segment<3>(pose_layout::kThetaGlobal) = theta_g;
    v.tail(theta_p.size()) = theta_p;
    return v;
}

PoseParams PoseParams::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() < pose_layout::kThetaPose || (flat.size() - pose_layout::kThetaPose) % 3 != 0) {
        throw Error(ErrorKind::DimensionMismatch, "pose", "flattened pose has invalid length " +
                                                             std::to_string(flat.size()));
    }
    PoseParams p;
    p.kappa = flat.segment<2>(pose_layout::kKappa);
    p.sigma = flat[pose_layout::kSigma];
    p.theta_g = flat.segment<3>(pose_layout::kThetaGlobal);
    p.theta_p = flat.tail(flat.size() - pose_layout::kThetaPose);
    return p;
}

bool PoseParams::finite() const {
    return kappa.allFinite() && std::isfinite(sigma) && theta_g.allFinite() && theta_p.allFinite();
}

void Camera::validate() const {
    if (!(focal > 0.0)) throw Error(ErrorKind::Validation, "focal", "focal length must be positive");
    if (!(fixed_depth > 0.0)) throw Error(ErrorKind::Validation, "fixed_depth", "fixed depth must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorKind::Validation, "image_size", "image size must be positive");
}

void check_pose(const SkeletonModel& model, const PoseParams& pose) {
    if (pose.theta_p.size() != model.pose_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "theta_p",
                    "expected " + std::to_string(model.pose_dim()) + " entries, got " +
                        std::to_string(pose.theta_p.size()));
    }
    if (!(pose.sigma > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma", "scale must be positive");
    if (!pose.finite()) throw Error(ErrorKind::InvalidArgument, "pose", "non-finite pose parameter");
}

Kinematics forward_kinematics(const SkeletonModel& model, const PoseParams& pose) {
    check_pose(model, pose);
    const int n = model.num_joints();
    Kinematics kin;
    kin.joints.resize(n, 3);
    kin.local_rot.resize(n);
    kin.world_rot.resize(n);

    kin.local_rot[0] = axis_angle_to_matrix(pose.theta_g);
    kin.world_rot[0] = kin.local_rot[0];
    kin.joints.row(0) << pose.kappa.x(), pose.kappa.y(), 0.0;
    for (int j = 1; j < n; ++j) {
        const int p = model.joints[j].parent;
        kin.local_rot[j] = axis_angle_to_matrix(pose.theta_p.segment<3>(3 * (j - 1)));
        kin.world_rot[j] = kin.world_rot[p] * kin.local_rot[j];
        kin.joints.row(j) = kin.joints.row(p) + (pose.sigma * (kin.world_rot[p] * model.rest_offsets[j])).transpose();
    }

    const int k_count = model.num_keypoints();
    kin.keypoints.resize(k_count, 3);
    for (int k = 0; k < k_count; ++k) {
        const auto& kp = model.keypoints[k];
        kin.keypoints.row(k) = kin.joints.row(kp.joint) + (pose.sigma * (kin.world_rot[kp.joint] * kp.offset)).transpose();
    }
    return kin;
}

Eigen::VectorXd forward_kinematics_backward(const SkeletonModel& model, const PoseParams& pose,
                                            const Kinematics& kin, const Points3& grad_joints,
                                            const Points3& grad_keypoints) {
    const int n = model.num_joints();
    Points3 g_pos = grad_joints;
    std::vector<Eigen::Matrix3d> g_world(n, Eigen::Matrix3d::Zero());
    double g_sigma = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(pose_layout::size(model.pose_dim()));

    for (int k = 0; k < model.num_keypoints(); ++k) {
        const auto& kp = model.keypoints[k];
        const Eigen::Vector3d g = grad_keypoints.row(k).transpose();
        g_pos.row(kp.joint) += g.transpose();
        g_world[kp.joint] += pose.sigma * g * kp.offset.transpose();
        g_sigma += (kin.world_rot[kp.joint] * kp.offset).dot(g);
    }

    for (int j = n - 1; j >= 1; --j) {
        const int p = model.joints[j].parent;
        // world_rot[j] = world_rot[p] * local_rot[j]
        g_world[p] += g_world[j] * kin.local_rot[j].transpose();
        const Eigen::Matrix3d g_local = kin.world_rot[p].transpose() * g_world[j];
        grad.segment<3>(pose_layout::kThetaPose + 3 * (j - 1)) =
            axis_angle_backward(pose.theta_p.segment<3>(3 * (j - 1)), g_local);
        // joints[j] = joints[p] + sigma * world_rot[p] * offset_j
        const Eigen::Vector3d g = g_pos.row(j).transpose();
        g_pos.row(p) += g.transpose();
        g_world[p] += pose.sigma * g * model.rest_offsets[j].transpose();
        g_sigma += (kin.world_rot[p] * model.rest_offsets[j]).dot(g);
    }

    grad.segment<3>(pose_layout::kThetaGlobal) = axis_angle_backward(pose.theta_g, g_world[0]);
    grad[pose_layout::kKappa] = g_pos(0, 0);
    grad[pose_layout::kKappa + 1] = g_pos(0, 1);
    grad[pose_layout::kSigma] = g_sigma;
    return grad;
}

Points2 project(const Camera& camera, const Points3& points) {
    Points2 out(points.rows(), 2);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double z = points(i, 2) + camera.fixed_depth;
        if (!(z > 0.0)) {
            throw Error(ErrorKind::NonPositiveDepth, "points[" + std::to_string(i) + "]",
                        "point " + std::to_string(i) + " has non-positive depth " + std::to_string(z));
        }
        out(i, 0) = camera.focal * points(i, 0) / z + camera.principal.x();
        out(i, 1) = camera.focal * points(i, 1) / z + camera.principal.y();
    }
    return out;
}

Points3 project_backward(const Camera& camera, const Points3& points, const Points2& grad_pixels) {
    Points3 g(points.rows(), 3);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double z = points(i, 2) + camera.fixed_depth;
        const double s = camera.focal / z;
        const double gu = grad_pixels(i, 0);
        const double gv = grad_pixels(i, 1);
        g(i, 0) = s * gu;
        g(i, 1) = s * gv;
        g(i, 2) = -s / z * (points(i, 0) * gu + points(i, 1) * gv);
    }
    return g;
}

SkeletonModel default_bird_model() {
    SkeletonModel m;
    // Model frame: bird faces +x, +y is the bird's right, +z points away from a top-down camera.
    struct J {
        const char* name;
        int parent;
        double ox, oy, oz;
        double radius;
    };
    const J joints[] = {
        {"root", -1, 0.0, 0.0, 0.0, 0.0},
        {"chest", 0, 0.15, 0.0, 0.0, 0.075},
        {"neck", 1, 0.11, 0.0, -0.02, 0.04},
        {"head", 2, 0.09, 0.0, -0.02, 0.045},
        {"beak", 3, 0.08, 0.0, 0.005, 0.014},
        {"lower_back", 0, -0.14, 0.0, 0.0, 0.07},
        {"tail", 5, -0.13, 0.0, 0.01, 0.035},
        {"left_shoulder", 1, -0.02, -0.07, -0.01, 0.03},
        {"left_elbow", 7, -0.09, -0.03, 0.0, 0.028},
        {"left_wingtip", 8, -0.18, -0.01, 0.0, 0.022},
        {"right_shoulder", 1, -0.02, 0.07, -0.01, 0.03},
        {"right_elbow", 10, -0.09, 0.03, 0.0, 0.028},
        {"right_wingtip", 11, -0.18, 0.01, 0.0, 0.022},
        {"left_knee", 5, 0.06, -0.05, 0.04, 0.018},
        {"left_foot", 13, 0.05, -0.01, 0.06, 0.014},
        {"right_knee", 5, 0.06, 0.05, 0.04, 0.018},
        {"right_foot", 15, 0.05, 0.01, 0.06, 0.014},
    };
    for (const auto& j : joints) {
        m.joints.push_back({j.name, j.parent});
        m.rest_offsets.emplace_back(j.ox, j.oy, j.oz);
        m.bone_radii.push_back(j.radius);
    }
    m.rest_offsets[0].setZero();

    struct K {
        const char* name;
        int joint;
        double ox, oy, oz;
    };
    const K keypoints[] = {
        {"beak_tip", 4, 0.0, 0.0, 0.0},
        {"crown", 3, 0.0, 0.0, -0.03},
        {"left_eye", 3, 0.02, -0.025, -0.01},
        {"right_eye", 3, 0.02, 0.025, -0.01},
        {"nape", 2, 0.0, 0.0, -0.03},
        {"throat", 2, 0.0, 0.0, 0.03},
        {"chest", 1, 0.0, 0.0, 0.0},
        {"back_center", 0, 0.0, 0.0, -0.05},
        {"lower_back", 5, 0.0, 0.0, 0.0},
        {"tail_tip", 6, -0.02, 0.0, 0.0},
        {"left_shoulder", 7, 0.0, 0.0, 0.0},
        {"left_wrist", 8, 0.0, 0.0, 0.0},
        {"left_wingtip", 9, 0.0, 0.0, 0.0},
        {"right_shoulder", 10, 0.0, 0.0, 0.0},
        {"right_wrist", 11, 0.0, 0.0, 0.0},
        {"right_wingtip", 12, 0.0, 0.0, 0.0},
        {"left_knee", 13, 0.0, 0.0, 0.0},
        {"left_foot", 14, 0.0, 0.0, 0.0},
        {"right_knee", 15, 0.0, 0.0, 0.0},
        {"right_foot", 16, 0.0, 0.0, 0.0},
    };
    for (const auto& k : keypoints) m.keypoints.push_back({k.name, k.joint, Eigen::Vector3d(k.ox, k.oy, k.oz)});

    // Diagonal surrogate prior around the rest pose: standard deviation 1.2 rad per axis.
    const int d = m.pose_dim();
    m.pose_prior_mean = Eigen::VectorXd::Zero(d);
    m.pose_prior_cov_inv = Eigen::MatrixXd::Identity(d, d) / (1.2 * 1.2);
    m.validate();
    return m;
}

}  // namespace birdpose
