#include "birdpose/tracker.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace birdpose {

double iou(const BBox& a, const BBox& b) {
    if (!a.well_ordered() || !b.well_ordered()) return 0.0;
    const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    const double inter = w * h;
    return inter / (a.area() + b.area() - inter);
}

Tracker::Tracker(TrackerOptions options) : options_(options) {
    if (!(options_.iou_threshold >= 0.0 && options_.iou_threshold <= 1.0)) {
        throw Error(ErrorKind::Validation, "iou_threshold", "threshold must lie in [0, 1]");
    }
    if (options_.memory < 1) throw Error(ErrorKind::Validation, "memory", "memory must be >= 1 frame");
}

Tracker::Step Tracker::associate(int frame_index, std::span<const BBox> detections) {
    if (started_ && frame_index <= last_frame_) {
        throw Error(ErrorKind::InvalidArgument, "frame_index",
                    "frame " + std::to_string(frame_index) + " does not follow frame " + std::to_string(last_frame_));
    }
    for (size_t d = 0; d < detections.size(); ++d) {
        if (!detections[d].well_ordered()) {
            throw Error(ErrorKind::InvalidArgument, "detections[" + std::to_string(d) + "]", "malformed bbox");
        }
    }
    started_ = true;
    last_frame_ = frame_index;
    Step step;

    // Tracks whose gap already reached the memory through skipped frames cannot match any more.
    std::vector<size_t> live;
    for (size_t t = 0; t < tracks_.size(); ++t) {
        Track& tr = tracks_[t];
        if (tr.terminated) continue;
        if (frame_index - tr.entries.back().frame_index - 1 >= options_.memory) {
            tr.misses = options_.memory;
            tr.terminated = true;
            step.terminated.push_back(tr.track_id);
            continue;
        }
        live.push_back(t);
    }

    struct Candidate {
        double score;
        int track_id;
        size_t track;
        size_t det;
    };
    std::vector<Candidate> cand;
    for (size_t t : live) {
        for (size_t d = 0; d < detections.size(); ++d) {
            const double s = iou(tracks_[t].last_bbox(), detections[d]);
            if (s > 0.0 && s >= options_.iou_threshold) cand.push_back({s, tracks_[t].track_id, t, d});
        }
    }
    std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.score, a.track_id, a.det) < std::tie(a.score, b.track_id, b.det);
    });

    std::vector<bool> track_used(tracks_.size(), false), det_used(detections.size(), false);
    for (const Candidate& c : cand) {
        if (track_used[c.track] || det_used[c.det]) continue;
        track_used[c.track] = det_used[c.det] = true;
        Track& tr = tracks_[c.track];
        tr.entries.push_back({frame_index, detections[c.det], static_cast<int>(c.det)});
        tr.misses = 0;
        step.updated.push_back(tr.track_id);
    }

    for (size_t t : live) {
        if (track_used[t]) continue;
        Track& tr = tracks_[t];
        tr.misses = frame_index - tr.entries.back().frame_index;
        if (tr.misses >= options_.memory) {
            tr.terminated = true;
            step.terminated.push_back(tr.track_id);
        }
    }

    for (size_t d = 0; d < detections.size(); ++d) {
        if (det_used[d]) continue;
        Track tr;
        tr.track_id = static_cast<int>(tracks_.size());
        tr.entries.push_back({frame_index, detections[d], static_cast<int>(d)});
        tracks_.push_back(std::move(tr));
        step.created.push_back(tracks_.back().track_id);
    }
    std::sort(step.updated.begin(), step.updated.end());
    return step;
}

std::vector<Track> track_frames(std::span<const std::vector<BBox>> frames, TrackerOptions options) {
    Tracker tracker(options);
    for (size_t t = 0; t < frames.size(); ++t) tracker.associate(static_cast<int>(t), frames[t]);
    return tracker.tracks();
}

}  // namespace birdpose
