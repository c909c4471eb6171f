#include "birdpose/losses.hpp"

#include <cmath>
#include <string>

namespace birdpose {

void ObservationFrame::validate(int crop_width, int crop_height) const {
    for (Eigen::Index i = 0; i < keypoints.rows(); ++i) {
        const double c = keypoints(i, 2);
        if (!(c >= 0.0 && c <= 1.0)) {
            throw Error(ErrorKind::Validation, "keypoints[" + std::to_string(i) + "].confidence",
                        "confidence outside [0, 1]");
        }
        if (!std::isfinite(keypoints(i, 0)) || !std::isfinite(keypoints(i, 1))) {
            throw Error(ErrorKind::Validation, "keypoints[" + std::to_string(i) + "]", "non-finite coordinate");
        }
    }
    if (missing) return;
    if (!bbox.well_ordered()) throw Error(ErrorKind::Validation, "bbox", "bbox must satisfy x1 > x0 and y1 > y0");
    if (!mask.empty() && (mask.width != crop_width || mask.height != crop_height)) {
        throw Error(ErrorKind::Validation, "mask",
                    "mask is " + std::to_string(mask.width) + "x" + std::to_string(mask.height) + ", expected " +
                        std::to_string(crop_width) + "x" + std::to_string(crop_height));
    }
}

void LossWeights::validate() const {
    const double all[] = {lambda_kpt, lambda_msk, lambda_pp, lambda_vel, lambda_acc, beta_g, beta_p};
    for (double w : all) {
        if (!(w >= 0.0)) throw Error(ErrorKind::Validation, "weights", "loss weights must be non-negative");
    }
    if (!(gm_sigma > 0.0)) throw Error(ErrorKind::Validation, "gm_sigma", "Geman-McLure scale must be positive");
}

double keypoint_loss(const Points2& projected, const ObservationFrame& obs, double gm_sigma, Points2& grad) {
    if (projected.rows() != obs.keypoints.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "keypoints",
                    std::to_string(projected.rows()) + " projected vs " + std::to_string(obs.keypoints.rows()) +
                        " observed keypoints");
    }
    const double s2 = gm_sigma * gm_sigma;
    grad.setZero(projected.rows(), 2);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < projected.rows(); ++i) {
        const double c = obs.keypoints(i, 2);
        if (c == 0.0) continue;
        const double dx = projected(i, 0) - obs.keypoints(i, 0);
        const double dy = projected(i, 1) - obs.keypoints(i, 1);
        const double r2 = dx * dx + dy * dy;
        const double denom = s2 + r2;
        sum += c * s2 * r2 / denom;
        // d/d(r2) of s2 r2 / (s2 + r2) = s4 / (s2 + r2)^2
        const double g = c * s2 * s2 / (denom * denom) * 2.0;
        grad(i, 0) = g * dx;
        grad(i, 1) = g * dy;
    }
    return sum;
}

double keypoint_loss(const Points2& projected, const ObservationFrame& obs, double gm_sigma) {
    Points2 unused;
    return keypoint_loss(projected, obs, gm_sigma, unused);
}

double mask_loss(const SoftSilhouette& rendered, const BinaryMask& target) {
    if (rendered.width != target.width || rendered.height != target.height) {
        throw Error(ErrorKind::DimensionMismatch, "mask",
                    "rendered " + std::to_string(rendered.width) + "x" + std::to_string(rendered.height) +
                        " vs target " + std::to_string(target.width) + "x" + std::to_string(target.height));
    }
    if (rendered.data.empty()) return 0.0;
    double sum = 0.0;
    for (size_t i = 0; i < rendered.data.size(); ++i) sum += std::abs(rendered.data[i] - (target.data[i] ? 1.0 : 0.0));
    return sum / static_cast<double>(rendered.data.size());
}

double pose_prior_loss(const Eigen::VectorXd& theta_p, const SkeletonModel& model, Eigen::VectorXd& grad) {
    if (theta_p.size() != model.pose_prior_mean.size()) {
        throw Error(ErrorKind::DimensionMismatch, "theta_p",
                    "expected " + std::to_string(model.pose_prior_mean.size()) + " entries, got " +
                        std::to_string(theta_p.size()));
    }
    const Eigen::VectorXd diff = theta_p - model.pose_prior_mean;
    const Eigen::VectorXd weighted = model.pose_prior_cov_inv * diff;
    grad = 2.0 * weighted;  // the inverse covariance is symmetric
    return diff.dot(weighted);
}

double pose_prior_loss(const Eigen::VectorXd& theta_p, const SkeletonModel& model) {
    Eigen::VectorXd unused;
    return pose_prior_loss(theta_p, model, unused);
}

namespace {

double smoothed_norm(double squared) {
    return std::sqrt(squared + kTemporalNormEpsilon * kTemporalNormEpsilon);
}

// Applies `visit(group_offset, group_size, beta)` for the global and body-pose groups.
template <typename Visit>
void for_each_group(const PoseParams& ref, double beta_g, double beta_p, Visit&& visit) {
    visit(pose_layout::kThetaGlobal, 3, beta_g);
    visit(pose_layout::kThetaPose, static_cast<int>(ref.theta_p.size()), beta_p);
}

Eigen::VectorXd group_of(const PoseParams& p, int offset) {
    return offset == pose_layout::kThetaGlobal ? Eigen::VectorXd(p.theta_g) : p.theta_p;
}

void check_sequence(std::span<const PoseParams> poses) {
    for (size_t i = 1; i < poses.size(); ++i) {
        if (poses[i].theta_p.size() != poses[0].theta_p.size()) {
            throw Error(ErrorKind::DimensionMismatch, "theta_p",
                        "frame " + std::to_string(i) + " has a different pose dimension");
        }
    }
}

double velocity_impl(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                     std::vector<Eigen::VectorXd>* grads) {
    if (poses.size() < 2) return 0.0;
    check_sequence(poses);
    double total = 0.0;
    for_each_group(poses[0], beta_g, beta_p, [&](int offset, int size, double beta) {
        if (size == 0) return;
        for (size_t i = 0; i + 1 < poses.size(); ++i) {
            const Eigen::VectorXd d = group_of(poses[i + 1], offset) - group_of(poses[i], offset);
            const double n = smoothed_norm(d.squaredNorm());
            total += beta * (n - kTemporalNormEpsilon);
            if (grads) {
                const Eigen::VectorXd g = (beta * scale / n) * d;
                (*grads)[i + 1].segment(offset, size) += g;
                (*grads)[i].segment(offset, size) -= g;
            }
        }
    });
    return total;
}

double acceleration_impl(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                         std::vector<Eigen::VectorXd>* grads) {
    if (poses.size() < 3) return 0.0;
    check_sequence(poses);
    double total = 0.0;
    for_each_group(poses[0], beta_g, beta_p, [&](int offset, int size, double beta) {
        if (size == 0) return;
        for (size_t i = 0; i + 2 < poses.size(); ++i) {
            const Eigen::VectorXd d = group_of(poses[i + 2], offset) - 2.0 * group_of(poses[i + 1], offset) +
                                      group_of(poses[i], offset);
            const double n = smoothed_norm(d.squaredNorm());
            total += beta * (n - kTemporalNormEpsilon);
            if (grads) {
                const Eigen::VectorXd g = (beta * scale / n) * d;
                (*grads)[i + 2].segment(offset, size) += g;
                (*grads)[i + 1].segment(offset, size) -= 2.0 * g;
                (*grads)[i].segment(offset, size) += g;
            }
        }
    });
    return total;
}

}  // namespace

double velocity_loss(std::span<const PoseParams> poses, double beta_g, double beta_p) {
    return velocity_impl(poses, beta_g, beta_p, 0.0, nullptr);
}

double acceleration_loss(std::span<const PoseParams> poses, double beta_g, double beta_p) {
    return acceleration_impl(poses, beta_g, beta_p, 0.0, nullptr);
}

double velocity_loss(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                     std::vector<Eigen::VectorXd>& grads) {
    return velocity_impl(poses, beta_g, beta_p, scale, &grads);
}

double acceleration_loss(std::span<const PoseParams> poses, double beta_g, double beta_p, double scale,
                         std::vector<Eigen::VectorXd>& grads) {
    return acceleration_impl(poses, beta_g, beta_p, scale, &grads);
}

ObjectiveResult total_objective(std::span<const PoseParams> poses, std::span<const ObservationFrame> observations,
                                const SkeletonModel& model, const Camera& camera, const LossWeights& weights,
                                int stage, double sharpness, bool with_gradient) {
    if (poses.size() != observations.size()) {
        throw Error(ErrorKind::DimensionMismatch, "observations",
                    std::to_string(poses.size()) + " poses vs " + std::to_string(observations.size()) +
                        " observation frames");
    }
    if (stage != 1 && stage != 2) throw Error(ErrorKind::InvalidArgument, "stage", "stage must be 1 or 2");
    weights.validate();

    ObjectiveResult res;
    const int dim = pose_layout::size(model.pose_dim());
    res.gradient.assign(poses.size(), Eigen::VectorXd::Zero(dim));
    const bool use_mask = stage == 2 && weights.lambda_msk > 0.0;

    for (size_t f = 0; f < poses.size(); ++f) {
        const PoseParams& pose = poses[f];
        const ObservationFrame& obs = observations[f];
        const Kinematics kin = forward_kinematics(model, pose);

        Points3 g_joints = Points3::Zero(model.num_joints(), 3);
        Points3 g_keypoints = Points3::Zero(model.num_keypoints(), 3);
        double g_sigma_extra = 0.0;

        if (!obs.missing && obs.keypoints.rows() > 0) {
            const Points2 projected = project(camera, kin.keypoints);
            Points2 g_px;
            const double e = keypoint_loss(projected, obs, weights.gm_sigma, g_px);
            res.terms.keypoint += e;
            res.value += weights.lambda_kpt * e;
            if (with_gradient) g_keypoints = project_backward(camera, kin.keypoints, weights.lambda_kpt * g_px);
        }

        if (use_mask && !obs.missing && !obs.mask.empty()) {
            const auto m = mask_loss_with_gradient(model, kin, pose.sigma, camera, sharpness, obs.mask);
            res.terms.mask += m.value;
            res.value += weights.lambda_msk * m.value;
            if (with_gradient) {
                g_joints += weights.lambda_msk * m.grad_joints;
                g_sigma_extra += weights.lambda_msk * m.grad_sigma;
            }
        }

        Eigen::VectorXd g_prior;
        const double pp = pose_prior_loss(pose.theta_p, model, g_prior);
        res.terms.prior += pp;
        res.value += weights.lambda_pp * pp;

        if (with_gradient) {
            Eigen::VectorXd& g = res.gradient[f];
            g = forward_kinematics_backward(model, pose, kin, g_joints, g_keypoints);
            g[pose_layout::kSigma] += g_sigma_extra;
            g.tail(model.pose_dim()) += weights.lambda_pp * g_prior;
        }
    }

    if (weights.lambda_vel > 0.0) {
        const double v = with_gradient ? velocity_loss(poses, weights.beta_g, weights.beta_p, weights.lambda_vel, res.gradient)
                                       : velocity_loss(poses, weights.beta_g, weights.beta_p);
        res.terms.velocity = v;
        res.value += weights.lambda_vel * v;
    }
    if (weights.lambda_acc > 0.0) {
        const double a = with_gradient
                             ? acceleration_loss(poses, weights.beta_g, weights.beta_p, weights.lambda_acc, res.gradient)
                             : acceleration_loss(poses, weights.beta_g, weights.beta_p);
        res.terms.acceleration = a;
        res.value += weights.lambda_acc * a;
    }
    if (!with_gradient) res.gradient.clear();
    return res;
}

}  // namespace birdpose
