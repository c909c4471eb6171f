#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "birdpose/fitter.hpp"
#include "birdpose/metrics.hpp"
#include "birdpose/preprocess.hpp"
#include "birdpose/synthgen.hpp"
#include "birdpose/tracker.hpp"

namespace birdpose {

// (frame, bird_id) or (frame, detection_id).
using DetectionKey = std::pair<int, int>;

// One bird's crop-space observations with optional image-space ground truth.
struct TrackData {
    int track_id = 0;
    std::vector<ObservationFrame> observations;
    std::vector<Points2> truth;         // original image pixels; empty when unknown
    std::vector<Visibility> visible;
};

struct Dataset {
    std::vector<TrackData> tracks;
};

// Image-space ground truth of one bird in one frame.
struct TruthRecord {
    Points2 keypoints;
    Visibility visible;
};

// A preprocessed detection: crop-space observation tagged with its detection id.
struct CroppedDetection {
    int detection_id = 0;
    ObservationFrame frame;
};

// A fitted track: the observations it was fitted to (masks may be dropped) and the result.
struct FittedTrack {
    int track_id = 0;
    std::vector<ObservationFrame> observations;
    FitResult fit;
};

// Crops every frame of a synthetic sequence as the detector pipeline would.
TrackData track_from_synthetic(const SyntheticSequence& seq, int track_id, const CropOptions& crop = {});

// One track per synthetic bird, with ground truth; identities are known so no tracker is involved.
Dataset synthetic_dataset(const SkeletonModel& model, const SynthConfig& config, std::uint64_t seed,
                          const CropOptions& crop = {});

// Crops every detection that has both keypoints and a non-empty mask; the box is the mask's tight box.
// Keys of detections that could not be cropped are appended to `skipped`.
std::vector<CroppedDetection> preprocess_detections(const std::map<DetectionKey, KeypointSet>& keypoints,
                                                    const std::map<DetectionKey, BinaryMask>& masks,
                                                    const CropOptions& options = {},
                                                    std::vector<DetectionKey>* skipped = nullptr);

// IoU tracking of the detection boxes; entries carry detection ids.
std::vector<Track> track_detections(const std::vector<CroppedDetection>& detections, TrackerOptions options = {});

// Observations of each track from its first to its last frame. Frames without a detection are missing:
// zero-confidence keypoints, no mask, and the previous frame's crop and box.
std::vector<TrackData> assemble_tracks(const std::vector<Track>& tracks,
                                       const std::vector<CroppedDetection>& detections, int num_keypoints);

// Projected keypoints mapped back to original image pixels through each frame's crop.
std::vector<Points2> image_keypoints(const FitResult& fit, std::span<const ObservationFrame> observations);

// Metric series for a fitted track (bbox normalization from the observations). Missing frames count as
// invisible since they have no mask box.
TrackSeries series_for(const TrackData& track, const FitResult& fit);

struct TrackFit {
    int track_id = 0;
    FitResult fit;
};

std::vector<TrackFit> fit_dataset(const SkeletonModel& model, const Camera& camera, const Dataset& data,
                                  const FitConfig& config);

// Pooled metrics over every track with ground truth.
MetricsReport evaluate_dataset(const Dataset& data, const std::vector<TrackFit>& fits);

struct TruthMatch {
    int bird_id = 0;
    TrackSeries series;
};

// Ground-truth bird with the lowest me_p over the track's frames (ties go to the lower id); nullopt when no
// bird shares a visible keypoint with the track.
std::optional<TruthMatch> match_truth(const FittedTrack& track, const std::map<DetectionKey, TruthRecord>& truth);

struct EvaluationResult {
    MetricsReport report;
    std::vector<int> birds;   // matched bird per report track
    std::vector<int> frames;  // frames per report track
};

// Matches every track to ground truth and pools the metrics. Unmatched tracks are left out; throws when
// none matches.
EvaluationResult evaluate_tracks(const std::vector<FittedTrack>& tracks,
                                 const std::map<DetectionKey, TruthRecord>& truth);

}  // namespace birdpose
