#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Geometry>

#include "birdpose/rotation.hpp"
#include "birdpose/skeleton.hpp"
#include "test_support.hpp"

namespace birdpose {
namespace {

using testing::central_difference;
using testing::chain_model;
using testing::random_pose;
using testing::relative_error;

Eigen::Matrix3d reference_rotation(const Eigen::Vector3d& w) {
    if (w.norm() == 0.0) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix();
}

TEST(Rotation, MatchesAngleAxis) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double scale = i < 50 ? 1e-3 : 1.0;
        const Eigen::Vector3d w(scale * n(rng), scale * n(rng), scale * n(rng));
        EXPECT_LT((axis_angle_to_matrix(w) - reference_rotation(w)).cwiseAbs().maxCoeff(), 1e-14);
    }
    EXPECT_EQ(axis_angle_to_matrix(Eigen::Vector3d::Zero()), Eigen::Matrix3d::Identity());
}

TEST(Rotation, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double scale : {0.0, 1e-4, 0.03, 0.06, 1.0, 2.5}) {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Vector3d w = scale * Eigen::Vector3d(n(rng), n(rng), n(rng));
            Eigen::Matrix3d g;
            for (int k = 0; k < 9; ++k) g(k / 3, k % 3) = n(rng);
            auto f = [&](const Eigen::VectorXd& x) {
                return (g.array() * reference_rotation(Eigen::Vector3d(x)).array()).sum();
            };
            const Eigen::VectorXd fd = central_difference(f, Eigen::VectorXd(w), 1e-6);
            const Eigen::VectorXd an = axis_angle_backward(w, g);
            EXPECT_LT(relative_error(an, fd), 1e-7) << "scale " << scale;
        }
    }
}

TEST(Rotation, LogRoundTrip) {
    const Eigen::Vector3d w(0.3, -0.7, 1.1);
    EXPECT_LT((matrix_to_axis_angle(axis_angle_to_matrix(w)) - w).norm(), 1e-12);
}

TEST(ForwardKinematics, IdentityPoseIsCumulativeOffsets) {
    const SkeletonModel m = default_bird_model();
    const PoseParams p = PoseParams::rest(m);
    const Kinematics kin = forward_kinematics(m, p);
    for (int j = 0; j < m.num_joints(); ++j) {
        Eigen::Vector3d expected = Eigen::Vector3d::Zero();
        for (int a = j; a > 0; a = m.joints[a].parent) expected += m.rest_offsets[a];
        EXPECT_LT((kin.joints.row(j).transpose() - expected).norm(), 1e-15) << m.joints[j].name;
    }
}

TEST(ForwardKinematics, UniformScaleIsLinear) {
    const SkeletonModel m = default_bird_model();
    std::mt19937_64 rng(3);
    PoseParams p = random_pose(m, rng);
    p.sigma = 1.0;
    const Kinematics k1 = forward_kinematics(m, p);
    p.sigma = 2.0;
    const Kinematics k2 = forward_kinematics(m, p);
    for (int j = 0; j < m.num_joints(); ++j) {
        const Eigen::RowVector3d r1 = k1.joints.row(j) - k1.joints.row(0);
        const Eigen::RowVector3d r2 = k2.joints.row(j) - k2.joints.row(0);
        EXPECT_LT((r2 - 2.0 * r1).norm(), 1e-14);
    }
    p.theta_g.setZero();
    p.theta_p.setZero();
    const Kinematics k3 = forward_kinematics(m, p);
    p.sigma = 1.0;
    const Kinematics k4 = forward_kinematics(m, p);
    EXPECT_LT(((k3.joints.rowwise() - k3.joints.row(0)) - 2.0 * (k4.joints.rowwise() - k4.joints.row(0))).norm(), 1e-14);
}

TEST(ForwardKinematics, ThreeJointChainMatchesHandComposition) {
    const SkeletonModel m = chain_model();
    PoseParams p = PoseParams::rest(m);
    p.kappa = {0.05, -0.02};
    p.sigma = 1.3;
    p.theta_g = {0.2, -0.1, 0.9};
    p.theta_p << 0.0, 0.0, 0.5, 0.1, 0.3, -0.4;

    // Hand-written composition with Eigen's AngleAxis.
    const Eigen::Matrix3d rg = reference_rotation(p.theta_g);
    const Eigen::Matrix3d r1 = reference_rotation(p.theta_p.segment<3>(0));
    const Eigen::Matrix3d r2 = reference_rotation(p.theta_p.segment<3>(3));
    const Eigen::Vector3d j0(0.05, -0.02, 0.0);
    const Eigen::Vector3d j1 = j0 + 1.3 * rg * Eigen::Vector3d(0.2, 0.0, 0.0);
    const Eigen::Vector3d j2 = j1 + 1.3 * rg * r1 * Eigen::Vector3d(0.15, 0.05, 0.0);
    const Eigen::Vector3d tip = j2 + 1.3 * rg * r1 * r2 * Eigen::Vector3d(0.02, 0.0, 0.0);

    const Kinematics kin = forward_kinematics(m, p);
    EXPECT_LT((kin.joints.row(0).transpose() - j0).norm(), 1e-14);
    EXPECT_LT((kin.joints.row(1).transpose() - j1).norm(), 1e-14);
    EXPECT_LT((kin.joints.row(2).transpose() - j2).norm(), 1e-14);
    EXPECT_LT((kin.keypoints.row(2).transpose() - tip).norm(), 1e-14);
}

TEST(ForwardKinematics, DimensionMismatchNamesField) {
    const SkeletonModel m = default_bird_model();
    PoseParams p = PoseParams::rest(m);
    p.theta_p.resize(5);
    try {
        forward_kinematics(m, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
        EXPECT_EQ(e.field(), "theta_p");
    }
}

TEST(ForwardKinematics, EquivariantUnderGlobalRotation) {
    const SkeletonModel m = default_bird_model();
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        PoseParams p = random_pose(m, rng);
        const Eigen::Matrix3d r = reference_rotation(Eigen::Vector3d(0.4, -0.2, 1.3) * (trial + 1) / 20.0);
        const Kinematics k1 = forward_kinematics(m, p);
        p.theta_g = matrix_to_axis_angle(r * axis_angle_to_matrix(p.theta_g));
        const Kinematics k2 = forward_kinematics(m, p);
        for (int j = 0; j < m.num_joints(); ++j) {
            const Eigen::Vector3d a = r * (k1.joints.row(j) - k1.joints.row(0)).transpose();
            const Eigen::Vector3d b = (k2.joints.row(j) - k2.joints.row(0)).transpose();
            EXPECT_LE((a - b).norm(), 1e-9 * std::max(1.0, a.norm()));
        }
    }
}

TEST(ForwardKinematics, ContinuousInParameters) {
    const SkeletonModel m = default_bird_model();
    std::mt19937_64 rng(23);
    const PoseParams p = random_pose(m, rng);
    const Eigen::VectorXd x = p.flatten();
    const Kinematics k0 = forward_kinematics(m, p);
    for (double eps : {1e-3, 1e-5, 1e-7}) {
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Eigen::VectorXd y = x;
            y[i] += eps;
            const Kinematics k1 = forward_kinematics(m, PoseParams::unflatten(y));
            // Slope bounded by the model's reach (< 1 unit per radian / per unit scale).
            EXPECT_LE((k1.joints - k0.joints).cwiseAbs().maxCoeff(), 2.0 * eps);
        }
    }
}

TEST(Projection, PinholeExamples) {
    Camera cam;
    cam.focal = 100.0;
    cam.principal = {0.0, 0.0};
    // Camera-space (1, 2, 10): model z = 0 plus the fixed depth of 10.
    cam.fixed_depth = 10.0;
    Points3 pts(1, 3);
    pts << 1.0, 2.0, 0.0;
    const Points2 px = project(cam, pts);
    EXPECT_NEAR(px(0, 0), 10.0, 1e-12);
    EXPECT_NEAR(px(0, 1), 20.0, 1e-12);

    Camera c2;
    Points3 axis(3, 3);
    axis << 0, 0, 0, 0, 0, 3.5, 0, 0, -2.0;
    const Points2 onaxis = project(c2, axis);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(onaxis(i, 0), c2.principal.x());
        EXPECT_EQ(onaxis(i, 1), c2.principal.y());
    }
}

TEST(Projection, BatchMatchesScalarLoop) {
    Camera cam;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Points3 pts(50, 3);
    for (int i = 0; i < 50; ++i) pts.row(i) << u(rng), u(rng), 2.0 * u(rng);
    const Points2 px = project(cam, pts);
    for (int i = 0; i < 50; ++i) {
        const double z = pts(i, 2) + cam.fixed_depth;
        EXPECT_EQ(px(i, 0), cam.focal * pts(i, 0) / z + cam.principal.x());
        EXPECT_EQ(px(i, 1), cam.focal * pts(i, 1) / z + cam.principal.y());
    }
}

TEST(Projection, NonPositiveDepthIdentifiesPoint) {
    Camera cam;
    Points3 pts(3, 3);
    pts << 0, 0, 0, 0, 0, -5.0, 0, 0, 1.0;
    try {
        project(cam, pts);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonPositiveDepth);
        EXPECT_EQ(e.field(), "points[1]");
    }
}

TEST(Projection, ProjectedFkGradientMatchesFiniteDifferences) {
    const SkeletonModel m = default_bird_model();
    const Camera cam;
    std::mt19937_64 rng(29);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const PoseParams p = random_pose(m, rng);
        Points2 wk(m.num_keypoints(), 2), wj(m.num_joints(), 2);
        for (Eigen::Index i = 0; i < wk.size(); ++i) wk.data()[i] = n(rng);
        for (Eigen::Index i = 0; i < wj.size(); ++i) wj.data()[i] = n(rng);
        auto f = [&](const Eigen::VectorXd& x) {
            const Kinematics k = forward_kinematics(m, PoseParams::unflatten(x));
            return (project(cam, k.keypoints).array() * wk.array()).sum() +
                   (project(cam, k.joints).array() * wj.array()).sum();
        };
        const Kinematics kin = forward_kinematics(m, p);
        const Eigen::VectorXd an = forward_kinematics_backward(m, p, kin, project_backward(cam, kin.joints, wj),
                                                               project_backward(cam, kin.keypoints, wk));
        const Eigen::VectorXd fd = central_difference(f, p.flatten(), 1e-6);
        EXPECT_LT(relative_error(an, fd), 1e-4);
    }
}

TEST(SkeletonModel, DefaultModelShape) {
    const SkeletonModel m = default_bird_model();
    EXPECT_EQ(m.num_keypoints(), 20);
    EXPECT_EQ(m.pose_dim(), 3 * (m.num_joints() - 1));
    EXPECT_NO_THROW(m.validate());
}

TEST(SkeletonModel, ValidationRejectsBrokenInvariants) {
    {
        SkeletonModel m = chain_model();
        m.joints[1].parent = 2;
        EXPECT_THROW(m.validate(), Error);
    }
    {
        SkeletonModel m = chain_model();
        m.joints[2].parent = -1;
        EXPECT_THROW(m.validate(), Error);
    }
    {
        SkeletonModel m = chain_model();
        m.keypoints[0].joint = 7;
        EXPECT_THROW(m.validate(), Error);
    }
    {
        SkeletonModel m = chain_model();
        m.pose_prior_cov_inv(0, 0) = -1.0;
        EXPECT_THROW(m.validate(), Error);
    }
    {
        SkeletonModel m = chain_model();
        m.pose_prior_cov_inv(0, 1) = 0.5;
        EXPECT_THROW(m.validate(), Error);
    }
}

}  // namespace
}  // namespace birdpose
