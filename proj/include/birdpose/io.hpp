#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "birdpose/pipeline.hpp"
#include "birdpose/tracker.hpp"

namespace birdpose {

namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// CSV `frame,bird_id,keypoint_id,x,y,confidence`. Keypoints without a row get confidence 0.
std::map<DetectionKey, KeypointSet> read_keypoints_csv(const fs::path& path, int num_keypoints);
void write_keypoints_csv(const fs::path& path, const std::map<DetectionKey, KeypointSet>& keypoints);

// CSV `frame,bird_id,keypoint_id,x,y,visible`.
std::map<DetectionKey, TruthRecord> read_truth_csv(const fs::path& path, int num_keypoints);
void write_truth_csv(const fs::path& path, const std::map<DetectionKey, TruthRecord>& truth);

// Row-major run lengths, alternating 0 and 1 runs and starting with a (possibly empty) 0 run.
std::vector<long> encode_rle(const BinaryMask& mask);
BinaryMask decode_rle(int width, int height, const std::vector<long>& runs);

// CSV `frame,bird_id,width,height,runs` with space-separated runs.
std::map<DetectionKey, BinaryMask> read_masks_csv(const fs::path& path);
void write_masks_csv(const fs::path& path, const std::map<DetectionKey, BinaryMask>& masks);
// Directory of `mask_<frame>_<bird>.pgm`; nonzero pixels are foreground.
std::map<DetectionKey, BinaryMask> read_mask_dir(const fs::path& dir);

// Binary PGM (P5) and PPM (P6) with maxval 255. read_rgb accepts both.
GrayImage read_pgm(const fs::path& path);
void write_pgm(const fs::path& path, const GrayImage& image);
RgbImage read_rgb(const fs::path& path);
void write_ppm(const fs::path& path, const RgbImage& image);

// CSV `track_id,frame,detection_id,x0,y0,x1,y1`, one row per track entry.
std::vector<Track> read_tracks_csv(const fs::path& path);
void write_tracks_csv(const fs::path& path, const std::vector<Track>& tracks);

// Preprocessed detections as JSON.
std::vector<CroppedDetection> read_observations_json(const fs::path& path);
void write_observations_json(const fs::path& path, const std::vector<CroppedDetection>& detections);

// Fit results as JSON.
std::vector<FittedTrack> read_fit_json(const fs::path& path, const SkeletonModel& model);
void write_fit_json(const fs::path& path, const std::vector<FittedTrack>& tracks);

// Versioned skeleton model JSON; the loader runs SkeletonModel::validate.
std::string model_to_json(const SkeletonModel& model);
SkeletonModel model_from_json(std::string_view text);
SkeletonModel load_model(const fs::path& path);
void save_model(const fs::path& path, const SkeletonModel& model);

// Metrics report CSV `track_id,bird_id,frames,position_count,velocity_count,me_p,me_v`, closed by an
// `all` row holding the pooled values. `birds[i]` is the ground-truth bird matched to report.tracks[i].
std::string metrics_csv(const MetricsReport& report, const std::vector<int>& birds, const std::vector<int>& frames);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, std::string_view text);

}  // namespace birdpose
