#pragma once

#include <functional>
#include <random>

#include <Eigen/Core>

#include "birdpose/skeleton.hpp"

namespace birdpose::testing {

inline PoseParams random_pose(const SkeletonModel& model, std::mt19937_64& rng, double pose_scale = 0.4) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PoseParams p = PoseParams::rest(model);
    p.kappa = {0.1 * u(rng), 0.1 * u(rng)};
    p.sigma = 1.0 + 0.15 * u(rng);
    p.theta_g = {0.3 * u(rng), 0.3 * u(rng), 3.0 * u(rng)};
    for (Eigen::Index i = 0; i < p.theta_p.size(); ++i) p.theta_p[i] += pose_scale * u(rng);
    return p;
}

// Central differences of a scalar function of a flat vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double step) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = xp[i];
        xp[i] = orig + step;
        const double fp = f(xp);
        xp[i] = orig - step;
        const double fm = f(xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double denom = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / denom;
}

// Three-joint chain lying along +x, used where a hand-checkable model is needed.
inline SkeletonModel chain_model() {
    SkeletonModel m;
    m.joints = {{"base", -1}, {"mid", 0}, {"tip", 1}};
    m.rest_offsets = {Eigen::Vector3d::Zero(), Eigen::Vector3d(0.2, 0.0, 0.0), Eigen::Vector3d(0.15, 0.05, 0.0)};
    m.bone_radii = {0.0, 0.04, 0.03};
    m.keypoints = {{"base", 0, Eigen::Vector3d::Zero()},
                   {"mid", 1, Eigen::Vector3d::Zero()},
                   {"tip", 2, Eigen::Vector3d(0.02, 0.0, 0.0)}};
    m.pose_prior_mean = Eigen::VectorXd::Zero(6);
    m.pose_prior_cov_inv = Eigen::MatrixXd::Identity(6, 6);
    return m;
}

}  // namespace birdpose::testing
