#include "birdpose/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "birdpose/preprocess.hpp"

namespace birdpose {

void FitConfig::validate() const {
    if (window_size < 1) throw Error(ErrorKind::Validation, "window_size", "window size must be >= 1");
    if (stage1_iters < 0) throw Error(ErrorKind::Validation, "stage1_iters", "iteration counts must be >= 0");
    if (stage2_iters < 0) throw Error(ErrorKind::Validation, "stage2_iters", "iteration counts must be >= 0");
    if (median_window < 1 || median_window % 2 == 0) {
        throw Error(ErrorKind::Validation, "median_window", "median window must be odd and >= 1");
    }
    if (!(sharpness > 0.0)) throw Error(ErrorKind::Validation, "sharpness", "sharpness must be positive");
    if (!(stage1_lambda_msk >= 0.0)) {
        throw Error(ErrorKind::Validation, "stage1_lambda_msk", "mask weight must be non-negative");
    }
    weights.validate();
    adam.validate();
}

namespace {

struct Spread {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    double rms = 0.0;
    double weight = 0.0;
};

// Confidence-weighted centroid and RMS radius of `pts` (weights from `obs`).
Spread spread_of(const Points2& pts, const KeypointSet& obs) {
    Spread s;
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
        const double c = obs(i, 2);
        if (c <= 0.0) continue;
        s.centroid += c * pts.row(i).transpose();
        s.weight += c;
    }
    if (s.weight <= 0.0) return s;
    s.centroid /= s.weight;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
        const double c = obs(i, 2);
        if (c > 0.0) acc += c * (pts.row(i).transpose() - s.centroid).squaredNorm();
    }
    s.rms = std::sqrt(acc / s.weight);
    return s;
}

bool initializable(const ObservationFrame& obs) {
    if (obs.missing) return false;
    for (Eigen::Index i = 0; i < obs.keypoints.rows(); ++i) {
        if (obs.keypoints(i, 2) > 0.0) return true;
    }
    return false;
}

Points2 observed_xy(const ObservationFrame& obs) { return obs.keypoints.leftCols<2>(); }

std::string term_name(const ObjectiveTerms& t) {
    if (!std::isfinite(t.keypoint)) return "keypoint";
    if (!std::isfinite(t.mask)) return "mask";
    if (!std::isfinite(t.prior)) return "prior";
    if (!std::isfinite(t.velocity)) return "velocity";
    if (!std::isfinite(t.acceleration)) return "acceleration";
    return "total";
}

constexpr double kMinSigma = 1e-3;

}  // namespace

std::vector<InitCandidate> init_candidates(const SkeletonModel& model, const Camera& camera,
                                           const ObservationFrame& obs, double gm_sigma) {
    if (!initializable(obs)) {
        throw Error(ErrorKind::Uninitializable, "frame " + std::to_string(obs.frame_index),
                    "no keypoint with positive confidence");
    }
    if (obs.keypoints.rows() != model.num_keypoints()) {
        throw Error(ErrorKind::DimensionMismatch, "keypoints",
                    std::to_string(obs.keypoints.rows()) + " observed vs " + std::to_string(model.num_keypoints()) +
                        " model keypoints");
    }
    const Spread target = spread_of(observed_xy(obs), obs.keypoints);
    const double to_units = camera.fixed_depth / camera.focal;

    std::vector<InitCandidate> out;
    out.reserve(kInitCandidates);
    for (int k = 0; k < kInitCandidates; ++k) {
        InitCandidate c;
        c.yaw = k * 2.0 * std::numbers::pi / kInitCandidates;
        c.pose = PoseParams::rest(model);
        c.pose.theta_p = model.pose_prior_mean;
        c.pose.theta_g = Eigen::Vector3d(0.0, 0.0, c.yaw);

        const Spread unit = spread_of(project(camera, forward_kinematics(model, c.pose).keypoints), obs.keypoints);
        if (unit.rms > 0.0 && target.rms > 0.0) c.pose.sigma = target.rms / unit.rms;
        const Spread scaled = spread_of(project(camera, forward_kinematics(model, c.pose).keypoints), obs.keypoints);
        c.pose.kappa = (target.centroid - scaled.centroid) * to_units;

        c.loss = keypoint_loss(project(camera, forward_kinematics(model, c.pose).keypoints), obs, gm_sigma);
        out.push_back(std::move(c));
    }
    return out;
}

PoseParams initialize(const SkeletonModel& model, const Camera& camera, const ObservationFrame& obs,
                      double gm_sigma) {
    const auto cands = init_candidates(model, camera, obs, gm_sigma);
    const auto best = std::min_element(cands.begin(), cands.end(),
                                       [](const InitCandidate& a, const InitCandidate& b) { return a.loss < b.loss; });
    return best->pose;
}

std::vector<PoseParams> initialize_window(const SkeletonModel& model, const Camera& camera,
                                          std::span<const ObservationFrame> observations, double gm_sigma) {
    const auto first = std::find_if(observations.begin(), observations.end(), initializable);
    if (first == observations.end()) {
        throw Error(ErrorKind::Uninitializable, "observations", "no frame in the window has a confident keypoint");
    }
    const size_t f0 = static_cast<size_t>(first - observations.begin());
    const PoseParams base = initialize(model, camera, *first, gm_sigma);
    const Eigen::Vector2d base_centroid = spread_of(observed_xy(*first), first->keypoints).centroid;
    const double to_units = camera.fixed_depth / camera.focal;

    std::vector<PoseParams> poses(observations.size(), base);
    for (size_t f = f0 + 1; f < observations.size(); ++f) {
        poses[f] = poses[f - 1];
        if (!initializable(observations[f])) continue;
        const Eigen::Vector2d c = spread_of(observed_xy(observations[f]), observations[f].keypoints).centroid;
        poses[f].kappa = base.kappa + (c - base_centroid) * to_units;
    }
    return poses;
}

FitResult fit_window(const SkeletonModel& model, const Camera& camera, std::span<const ObservationFrame> observations,
                     const FitConfig& config, std::optional<std::span<const PoseParams>> init) {
    config.validate();
    camera.validate();
    if (observations.empty()) throw Error(ErrorKind::InvalidArgument, "observations", "empty window");
    for (size_t f = 0; f < observations.size(); ++f) {
        try {
            observations[f].validate(camera.width, camera.height);
        } catch (const Error& e) {
            throw Error(e.kind(), "observations[" + std::to_string(f) + "]." + e.field(), e.message());
        }
    }

    std::vector<PoseParams> poses;
    if (init) {
        if (init->size() != observations.size()) {
            throw Error(ErrorKind::DimensionMismatch, "init",
                        std::to_string(init->size()) + " initial poses for " + std::to_string(observations.size()) +
                            " frames");
        }
        poses.assign(init->begin(), init->end());
        for (const auto& p : poses) check_pose(model, p);
    } else {
        poses = initialize_window(model, camera, observations, config.weights.gm_sigma);
    }
    if (config.common_size) {
        for (auto& p : poses) p.sigma = poses.front().sigma;
    }

    const int dim = pose_layout::size(model.pose_dim());
    const Eigen::Index n = static_cast<Eigen::Index>(poses.size());
    Eigen::VectorXd x(n * dim);
    for (Eigen::Index f = 0; f < n; ++f) x.segment(f * dim, dim) = poses[f].flatten();

    auto unpack = [&](const Eigen::VectorXd& v) {
        for (Eigen::Index f = 0; f < n; ++f) poses[f] = PoseParams::unflatten(v.segment(f * dim, dim));
    };

    WindowDiagnostics diag;
    diag.frames = static_cast<int>(n);
    diag.loss_trace.reserve(static_cast<size_t>(config.stage1_iters) + config.stage2_iters);

    const ObjectiveResult start =
        total_objective(poses, observations, model, camera, config.weights, 2, config.sharpness, false);
    diag.initial_loss = start.value;
    diag.initial_terms = start.terms;

    // Adam does not descend monotonically; the lowest full objective seen is what gets returned.
    Eigen::VectorXd best_x = x;
    double best_value = start.value;

    Eigen::VectorXd grad(n * dim);
    Adam adam(n * dim, config.adam);
    long iteration = 0;
    for (int stage = 1; stage <= 2; ++stage) {
        LossWeights w = config.weights;
        int mode = stage;
        if (stage == 1 && config.stage1_lambda_msk > 0.0) {
            w.lambda_msk = config.stage1_lambda_msk;
            mode = 2;
        }
        const int iters = stage == 1 ? config.stage1_iters : config.stage2_iters;
        adam.reset();
        for (int it = 0; it < iters; ++it, ++iteration) {
            const ObjectiveResult r = total_objective(poses, observations, model, camera, w, mode, config.sharpness);
            if (!std::isfinite(r.value)) {
                throw Error(ErrorKind::NumericalFailure, "iteration " + std::to_string(iteration),
                            "stage " + std::to_string(stage) + " term '" + term_name(r.terms) + "' is not finite");
            }
            for (Eigen::Index f = 0; f < n; ++f) {
                if (!r.gradient[f].allFinite()) {
                    throw Error(ErrorKind::NumericalFailure, "iteration " + std::to_string(iteration),
                                "stage " + std::to_string(stage) + " gradient of frame " + std::to_string(f) +
                                    " is not finite");
                }
                grad.segment(f * dim, dim) = r.gradient[f];
            }
            diag.loss_trace.push_back(r.value);
            if (stage == 2 && r.value < best_value) {
                best_value = r.value;
                best_x = x;
            }
            if (config.common_size) {
                // One shared variable: every copy sees the summed gradient, so all copies stay bitwise equal.
                double g = 0.0;
                for (Eigen::Index f = 0; f < n; ++f) g += grad[f * dim + pose_layout::kSigma];
                for (Eigen::Index f = 0; f < n; ++f) grad[f * dim + pose_layout::kSigma] = g;
            }
            adam.step(x, grad);
            for (Eigen::Index f = 0; f < n; ++f) {
                double& s = x[f * dim + pose_layout::kSigma];
                s = std::max(s, kMinSigma);
            }
            unpack(x);
        }
    }

    ObjectiveResult end =
        total_objective(poses, observations, model, camera, config.weights, 2, config.sharpness, false);
    if (!std::isfinite(end.value)) {
        throw Error(ErrorKind::NumericalFailure, "iteration " + std::to_string(iteration),
                    "final term '" + term_name(end.terms) + "' is not finite");
    }
    if (best_value < end.value) {
        unpack(best_x);
        end = total_objective(poses, observations, model, camera, config.weights, 2, config.sharpness, false);
    }
    diag.final_loss = end.value;
    diag.final_terms = end.terms;

    FitResult res;
    res.projected_keypoints.reserve(poses.size());
    for (const auto& p : poses) res.projected_keypoints.push_back(project(camera, forward_kinematics(model, p).keypoints));
    res.poses = std::move(poses);
    res.windows.push_back(std::move(diag));
    return res;
}

std::vector<ObservationFrame> median_filter_observations(std::span<const ObservationFrame> observations, int window) {
    std::vector<ObservationFrame> out(observations.begin(), observations.end());
    std::vector<size_t> present;
    std::vector<KeypointSet> track;
    for (size_t f = 0; f < out.size(); ++f) {
        if (out[f].missing) continue;
        present.push_back(f);
        track.push_back(out[f].keypoints);
    }
    const auto filtered = weighted_median_filter(track, window);
    for (size_t i = 0; i < present.size(); ++i) out[present[i]].keypoints = filtered[i];
    return out;
}

FitResult fit_track(const SkeletonModel& model, const Camera& camera, std::span<const ObservationFrame> observations,
                    const FitConfig& config) {
    config.validate();
    std::vector<ObservationFrame> filtered;
    if (config.use_median_filter) {
        filtered = median_filter_observations(observations, config.median_window);
        observations = filtered;
    }
    FitResult res;
    for (size_t start = 0; start < observations.size(); start += config.window_size) {
        const size_t len = std::min<size_t>(config.window_size, observations.size() - start);
        const auto win = observations.subspan(start, len);
        FitResult w;
        if (std::none_of(win.begin(), win.end(), initializable) && !res.poses.empty()) {
            // Nothing to initialize from: carry the previous window's last pose forward.
            const std::vector<PoseParams> carry(len, res.poses.back());
            w = fit_window(model, camera, win, config, std::span<const PoseParams>(carry));
        } else {
            w = fit_window(model, camera, win, config);
        }
        w.windows.front().first = static_cast<int>(start);
        res.poses.insert(res.poses.end(), w.poses.begin(), w.poses.end());
        res.projected_keypoints.insert(res.projected_keypoints.end(), w.projected_keypoints.begin(),
                                       w.projected_keypoints.end());
        res.windows.push_back(std::move(w.windows.front()));
    }
    return res;
}

}  // namespace birdpose
