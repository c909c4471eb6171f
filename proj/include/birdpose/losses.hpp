#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "birdpose/observation.hpp"
#include "birdpose/silhouette.hpp"
#include "birdpose/skeleton.hpp"

namespace birdpose {

struct LossWeights {
    double lambda_kpt = 1.0;
    double lambda_msk = 1.0;
    double lambda_pp = 100.0;
    double lambda_vel = 0.0;
    double lambda_acc = 0.0;
    double beta_g = 10.0;
    double beta_p = 1.0;
    double gm_sigma = 50.0;  // Geman-McLure scale, pixels

    void validate() const;
};

// Smoothing of the temporal L2 norms: sqrt(|d|^2 + eps^2) - eps.
inline constexpr double kTemporalNormEpsilon = 1e-8;

// sum_i c_i * s^2 r_i^2 / (s^2 + r_i^2), r_i the 2D reprojection residual.
double keypoint_loss(const Points2& projected, const ObservationFrame& obs, double gm_sigma);
// Same value; also writes dL/d(projected) into `grad`.
double keypoint_loss(const Points2& projected, const ObservationFrame& obs, double gm_sigma, Points2& grad);

// Mean absolute per-pixel difference.
double mask_loss(const SoftSilhouette& rendered, const BinaryMask& target);

// (x - mu)^T Sigma^-1 (x - mu).
double pose_prior_loss(const Eigen::VectorXd& theta_p, const SkeletonModel& model);
double pose_prior_loss(const Eigen::VectorXd& theta_p, const SkeletonModel& model, Eigen::VectorXd& grad);

// sum_k beta_k sum_i |theta_k,i+1 - theta_k,i|. Returns 0 for fewer than two poses.
double velocity_loss(std::span<const PoseParams> poses, double beta_g, double beta_p);
// Returns 0 for fewer than three poses.
double acceleration_loss(std::span<const PoseParams> poses, double beta_g, double beta_p);

// Gradient variants accumulate `scale * dE/dpose` into grads[i] (flattened pose layout).
double velocity_loss(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                     std::vector<Eigen::VectorXd>& grads);
double acceleration_loss(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                         std::vector<Eigen::VectorXd>& grads);

struct ObjectiveTerms {
    // Unweighted sums over the window.
    double keypoint = 0.0;
    double mask = 0.0;
    double prior = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;
};

struct ObjectiveResult {
    double value = 0.0;
    ObjectiveTerms terms;
    std::vector<Eigen::VectorXd> gradient;  // per frame, flattened pose layout
};

// E = sum_frames(l_kpt E_kpt + [stage 2] l_msk E_msk + l_pp E_pp) + l_vel E_vel + l_acc E_acc.
// Missing frames contribute only the prior and temporal terms.
ObjectiveResult total_objective(std::span<const PoseParams> poses, std::span<const ObservationFrame> observations,
                                const SkeletonModel& model, const Camera& camera, const LossWeights& weights,
                                int stage, double sharpness = kDefaultSharpness, bool with_gradient = true);

}  // namespace birdpose
