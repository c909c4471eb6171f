#include "birdpose/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace birdpose {

namespace {

void check_aligned(std::span<const Points2> projected, std::span<const Points2> truth, std::span<const BBox> bboxes,
                   std::span<const Visibility> visible) {
    if (projected.size() != truth.size() || bboxes.size() != truth.size() ||
        (!visible.empty() && visible.size() != truth.size())) {
        throw Error(ErrorKind::DimensionMismatch, "frames",
                    "projected, ground truth, bbox and visibility frame counts differ");
    }
    for (size_t t = 0; t < truth.size(); ++t) {
        if (projected[t].rows() != truth[t].rows()) {
            throw Error(ErrorKind::DimensionMismatch, "frames[" + std::to_string(t) + "]",
                        std::to_string(projected[t].rows()) + " projected vs " + std::to_string(truth[t].rows()) +
                            " ground-truth keypoints");
        }
        if (!visible.empty() && !visible[t].empty() && visible[t].size() != static_cast<size_t>(truth[t].rows())) {
            throw Error(ErrorKind::DimensionMismatch, "visible[" + std::to_string(t) + "]",
                        "visibility length does not match the keypoint count");
        }
        if (!(bboxes[t].longest_side() > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "bboxes[" + std::to_string(t) + "]", "bbox has no extent");
        }
    }
}

bool is_visible(std::span<const Visibility> visible, size_t t, Eigen::Index i) {
    return visible.empty() || visible[t].empty() || visible[t][static_cast<size_t>(i)];
}

}  // namespace

double ErrorSum::rms() const {
    if (count == 0) throw Error(ErrorKind::InvalidArgument, "visible", "no visible keypoints to evaluate");
    return std::sqrt(sum_sq / static_cast<double>(count));
}

ErrorSum position_errors(std::span<const Points2> projected, std::span<const Points2> truth,
                         std::span<const BBox> bboxes, std::span<const Visibility> visible) {
    check_aligned(projected, truth, bboxes, visible);
    ErrorSum s;
    for (size_t t = 0; t < truth.size(); ++t) {
        const double l = bboxes[t].longest_side();
        for (Eigen::Index i = 0; i < truth[t].rows(); ++i) {
            if (!is_visible(visible, t, i)) continue;
            s.sum_sq += (projected[t].row(i) - truth[t].row(i)).squaredNorm() / (l * l);
            ++s.count;
        }
    }
    return s;
}

ErrorSum velocity_errors(std::span<const Points2> projected, std::span<const Points2> truth,
                         std::span<const BBox> bboxes, std::span<const Visibility> visible) {
    check_aligned(projected, truth, bboxes, visible);
    ErrorSum s;
    for (size_t t = 0; t + 1 < truth.size(); ++t) {
        const double l = bboxes[t].longest_side();
        for (Eigen::Index i = 0; i < truth[t].rows(); ++i) {
            if (!is_visible(visible, t, i) || !is_visible(visible, t + 1, i)) continue;
            const Eigen::RowVector2d vp = projected[t + 1].row(i) - projected[t].row(i);
            const Eigen::RowVector2d vg = truth[t + 1].row(i) - truth[t].row(i);
            s.sum_sq += (vp - vg).squaredNorm() / (l * l);
            ++s.count;
        }
    }
    return s;
}

double me_p(std::span<const Points2> projected, std::span<const Points2> truth, std::span<const BBox> bboxes,
            std::span<const Visibility> visible) {
    return position_errors(projected, truth, bboxes, visible).rms();
}

double me_v(std::span<const Points2> projected, std::span<const Points2> truth, std::span<const BBox> bboxes,
            std::span<const Visibility> visible) {
    if (truth.size() < 2) throw Error(ErrorKind::InvalidArgument, "frames", "velocity error needs at least two frames");
    return velocity_errors(projected, truth, bboxes, visible).rms();
}

MetricsReport evaluate(std::span<const TrackSeries> tracks) {
    MetricsReport rep;
    ErrorSum pos, vel;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& tr : tracks) {
        const ErrorSum p = position_errors(tr.projected, tr.truth, tr.bboxes, tr.visible);
        const ErrorSum v = velocity_errors(tr.projected, tr.truth, tr.bboxes, tr.visible);
        pos += p;
        vel += v;
        rep.tracks.push_back({tr.track_id, p.count ? p.rms() : nan, v.count ? v.rms() : nan, p.count, v.count});
    }
    rep.me_p = pos.rms();
    rep.me_v = vel.count ? vel.rms() : nan;
    return rep;
}

}  // namespace birdpose
