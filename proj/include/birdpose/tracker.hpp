#pragma once

#include <span>
#include <vector>

#include "birdpose/common.hpp"

namespace birdpose {

// Intersection over union; 0 when either box has zero area.
double iou(const BBox& a, const BBox& b);

struct TrackEntry {
    int frame_index = 0;
    BBox bbox;
    int detection = 0;  // index of the detection within its frame
};

struct Track {
    int track_id = 0;
    std::vector<TrackEntry> entries;
    int misses = 0;  // consecutive frames without a match
    bool terminated = false;

    const BBox& last_bbox() const { return entries.back().bbox; }
};

struct TrackerOptions {
    double iou_threshold = 0.1;
    int memory = 5;  // a track ends after this many consecutive misses
};

// Greedy IoU association of per-frame boxes into tracks. During a gap the last box is kept as is.
class Tracker {
public:
    explicit Tracker(TrackerOptions options = {});

    struct Step {
        std::vector<int> updated;     // ids of tracks that received a detection
        std::vector<int> created;
        std::vector<int> terminated;  // ids ended by this frame
    };

    // Frames must arrive in strictly increasing order; skipped frame indices count as misses.
    Step associate(int frame_index, std::span<const BBox> detections);

    const std::vector<Track>& tracks() const { return tracks_; }
    const TrackerOptions& options() const { return options_; }

private:
    TrackerOptions options_;
    std::vector<Track> tracks_;
    int last_frame_ = 0;
    bool started_ = false;
};

// Runs a tracker over frames[0..T); frame t holds the detections of frame index t.
std::vector<Track> track_frames(std::span<const std::vector<BBox>> frames, TrackerOptions options = {});

}  // namespace birdpose
