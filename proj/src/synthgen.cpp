#include "birdpose/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "birdpose/silhouette.hpp"

namespace birdpose {

void MotionSpec::validate() const {
    const double nonneg[] = {pose_step,        yaw_step,       tilt_step,          translation_step,
                             scale_step,       smoothing,      initial_pose_spread, keypoint_noise,
                             outlier_magnitude};
    for (double v : nonneg) {
        if (!(v >= 0.0)) throw Error(ErrorKind::Validation, "motion", "step sizes, noise and magnitudes must be >= 0");
    }
    if (!(outlier_probability >= 0.0 && outlier_probability <= 1.0)) {
        throw Error(ErrorKind::Validation, "outlier_probability", "probability must lie in [0, 1]");
    }
    if (!(initial_sigma > 0.0)) throw Error(ErrorKind::Validation, "initial_sigma", "scale must be positive");
    auto check_range = [](double lo, double hi, const char* field) {
        if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
            throw Error(ErrorKind::Validation, field, "confidence range must satisfy 0 <= min <= max <= 1");
        }
    };
    check_range(inlier_confidence_min, inlier_confidence_max, "inlier_confidence");
    check_range(outlier_confidence_min, outlier_confidence_max, "outlier_confidence");
    if (!(mask_sharpness > 0.0)) throw Error(ErrorKind::Validation, "mask_sharpness", "sharpness must be positive");
}

std::vector<double> gaussian_smooth(const std::vector<double>& signal, double std_frames) {
    if (std_frames <= 0.0 || signal.empty()) return signal;
    const int half = static_cast<int>(std::ceil(3.0 * std_frames));
    std::vector<double> kernel(2 * half + 1);
    for (int k = -half; k <= half; ++k) kernel[k + half] = std::exp(-0.5 * k * k / (std_frames * std_frames));
    const int n = static_cast<int>(signal.size());
    std::vector<double> out(signal.size());
    for (int t = 0; t < n; ++t) {
        double acc = 0.0, wsum = 0.0;
        for (int k = -half; k <= half; ++k) {
            const int s = t + k;
            if (s < 0 || s >= n) continue;
            acc += kernel[k + half] * signal[s];
            wsum += kernel[k + half];
        }
        out[t] = acc / wsum;
    }
    return out;
}

namespace {

// Cumulative sum of Gaussian steps, low-pass filtered, starting at zero displacement.
std::vector<double> random_walk(int frames, double step, double smoothing, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> w(frames, 0.0);
    for (int t = 1; t < frames; ++t) w[t] = w[t - 1] + step * gauss(rng);
    w = gaussian_smooth(w, smoothing);
    const double w0 = w.empty() ? 0.0 : w[0];
    for (double& v : w) v -= w0;
    return w;
}

}  // namespace

SyntheticSequence generate_trajectory(const SkeletonModel& model, const Camera& camera, int frames,
                                      const MotionSpec& spec, std::uint64_t seed) {
    if (frames < 1) throw Error(ErrorKind::InvalidArgument, "frames", "need at least one frame");
    spec.validate();
    camera.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const int d = model.pose_dim();
    PoseParams start = PoseParams::rest(model);
    start.theta_p = model.pose_prior_mean;
    for (int i = 0; i < d; ++i) start.theta_p[i] += spec.initial_pose_spread * gauss(rng);
    const double yaw0 = spec.random_initial_yaw ? 2.0 * std::numbers::pi * unit(rng) : spec.initial_yaw;
    start.theta_g = Eigen::Vector3d(0.0, 0.0, yaw0);
    start.sigma = spec.initial_sigma;
    const double px_to_units = camera.fixed_depth / camera.focal;
    start.kappa = spec.initial_offset * px_to_units;

    // Independent walks per degree of freedom, drawn in a fixed order.
    std::vector<std::vector<double>> pose_walks(d);
    for (int i = 0; i < d; ++i) pose_walks[i] = random_walk(frames, spec.pose_step, spec.smoothing, rng);
    std::vector<std::vector<double>> global_walks(3);
    global_walks[0] = random_walk(frames, spec.tilt_step, spec.smoothing, rng);
    global_walks[1] = random_walk(frames, spec.tilt_step, spec.smoothing, rng);
    global_walks[2] = random_walk(frames, spec.yaw_step, spec.smoothing, rng);
    const auto walk_x = random_walk(frames, spec.translation_step * px_to_units, spec.smoothing, rng);
    const auto walk_y = random_walk(frames, spec.translation_step * px_to_units, spec.smoothing, rng);
    const auto walk_s = random_walk(frames, spec.scale_step, spec.smoothing, rng);

    SyntheticSequence seq;
    const int k = model.num_keypoints();
    for (int t = 0; t < frames; ++t) {
        PoseParams p = start;
        for (int i = 0; i < d; ++i) p.theta_p[i] += pose_walks[i][t];
        for (int a = 0; a < 3; ++a) p.theta_g[a] += global_walks[a][t];
        p.kappa += Eigen::Vector2d(walk_x[t], walk_y[t]);
        p.sigma = std::max(1e-3, p.sigma + walk_s[t]);

        const Points2 truth = project(camera, forward_kinematics(model, p).keypoints);
        KeypointSet obs(k, 3);
        std::vector<bool> outlier(k, false);
        for (int i = 0; i < k; ++i) {
            Eigen::Vector2d xy = truth.row(i).transpose();
            xy.x() += spec.keypoint_noise * gauss(rng);
            xy.y() += spec.keypoint_noise * gauss(rng);
            double c = spec.inlier_confidence_min + (spec.inlier_confidence_max - spec.inlier_confidence_min) * unit(rng);
            if (unit(rng) < spec.outlier_probability) {
                const double angle = 2.0 * std::numbers::pi * unit(rng);
                xy += spec.outlier_magnitude * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                c = spec.outlier_confidence_min +
                    (spec.outlier_confidence_max - spec.outlier_confidence_min) * unit(rng);
                outlier[i] = true;
            }
            obs.row(i) << xy.x(), xy.y(), c;
        }

        const SoftSilhouette soft = render_soft_silhouette(model, p, camera, spec.mask_sharpness);
        BinaryMask mask(camera.width, camera.height, 0);
        for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = soft.data[i] > 0.5 ? 1 : 0;
        const auto box = mask_bbox(mask);

        seq.poses.push_back(p);
        seq.truth.push_back(truth);
        seq.keypoints.push_back(std::move(obs));
        seq.outliers.push_back(std::move(outlier));
        seq.masks.push_back(std::move(mask));
        seq.bboxes.push_back(box.value_or(BBox{}));
        seq.missing.push_back(!box.has_value());
    }
    return seq;
}

SynthConfig::SynthConfig() {
    // Detector-like corruption by default: 3 px noise and 5% outliers.
    motion.keypoint_noise = 3.0;
    motion.outlier_probability = 0.05;
}

void SynthConfig::validate() const {
    if (frames < 1) throw Error(ErrorKind::Validation, "synth.frames", "frames must be >= 1");
    if (birds < 1) throw Error(ErrorKind::Validation, "synth.birds", "birds must be >= 1");
    if (width < 1 || height < 1) throw Error(ErrorKind::Validation, "synth.width", "image size must be positive");
    if (!(bird_spacing >= 0.0)) throw Error(ErrorKind::Validation, "synth.bird_spacing", "spacing must be >= 0");
    motion.validate();
}

Camera SynthConfig::camera() const {
    Camera c;
    c.width = width;
    c.height = height;
    c.principal = {0.5 * width, 0.5 * height};
    return c;
}

std::vector<SyntheticSequence> generate_scene(const SkeletonModel& model, const SynthConfig& config,
                                              std::uint64_t seed) {
    config.validate();
    std::vector<SyntheticSequence> out;
    for (int b = 0; b < config.birds; ++b) {
        MotionSpec spec = config.motion;
        spec.initial_offset.x() += config.bird_spacing * (b - 0.5 * (config.birds - 1));
        out.push_back(generate_trajectory(model, config.camera(), config.frames, spec, seed + b));
    }
    return out;
}

}  // namespace birdpose
