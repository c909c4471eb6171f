#pragma once

#include <span>
#include <vector>

#include "birdpose/common.hpp"

namespace birdpose {

// Per-keypoint visibility of one frame; an empty vector means every keypoint is visible.
using Visibility = std::vector<bool>;

// Running sum of squared normalized errors, so that tracks can be pooled.
struct ErrorSum {
    double sum_sq = 0.0;
    long count = 0;

    ErrorSum& operator+=(const ErrorSum& o) {
        sum_sq += o.sum_sq;
        count += o.count;
        return *this;
    }
    // Throws InvalidArgument when count is zero.
    double rms() const;
};

// Squared residual norms divided by the frame's longest bbox side squared, over visible keypoints.
ErrorSum position_errors(std::span<const Points2> projected, std::span<const Points2> truth,
                         std::span<const BBox> bboxes, std::span<const Visibility> visible = {});
// Same on frame-to-frame velocities; a pair counts when the keypoint is visible in both frames and
// is normalized by the earlier frame's bbox.
ErrorSum velocity_errors(std::span<const Points2> projected, std::span<const Points2> truth,
                         std::span<const BBox> bboxes, std::span<const Visibility> visible = {});

// Normalized RMS position error. Throws when no keypoint is visible.
double me_p(std::span<const Points2> projected, std::span<const Points2> truth, std::span<const BBox> bboxes,
            std::span<const Visibility> visible = {});
// Normalized RMS velocity error. Throws for fewer than two frames.
double me_v(std::span<const Points2> projected, std::span<const Points2> truth, std::span<const BBox> bboxes,
            std::span<const Visibility> visible = {});

struct TrackSeries {
    int track_id = 0;
    std::vector<Points2> projected;
    std::vector<Points2> truth;
    std::vector<BBox> bboxes;
    std::vector<Visibility> visible;
};

struct TrackMetrics {
    int track_id = 0;
    double me_p = 0.0;
    double me_v = 0.0;
    long position_count = 0;
    long velocity_count = 0;
};

struct MetricsReport {
    std::vector<TrackMetrics> tracks;
    double me_p = 0.0;  // pooled RMS over every track
    double me_v = 0.0;
};

MetricsReport evaluate(std::span<const TrackSeries> tracks);

}  // namespace birdpose
