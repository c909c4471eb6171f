#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "birdpose/pipeline.hpp"
#include "birdpose/silhouette.hpp"

namespace birdpose {

using Rgb = std::array<std::uint8_t, 3>;

// Distinct colour per track id.
Rgb track_color(int track_id);

// Occupancy scaled to 0..255.
GrayImage silhouette_image(const SoftSilhouette& silhouette);

void set_pixel(RgbImage& image, int row, int col, const Rgb& color);
void draw_line(RgbImage& image, const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Rgb& color);
// Filled square of side 2 * half + 1 centred on the pixel containing `p`.
void draw_marker(RgbImage& image, const Eigen::Vector2d& p, int half, const Rgb& color);

// Draws one fitted bird onto an original-resolution frame: the outline of the rendered silhouette
// (occupancy >= 0.5), the bones, and the keypoints, all mapped from crop space through the inverse crop.
// Returns the image-space keypoint positions that were drawn.
Points2 draw_fitted_bird(RgbImage& image, const SkeletonModel& model, const Camera& camera,
                         const ObservationFrame& obs, const PoseParams& pose, const Rgb& color,
                         double sharpness = kDefaultSharpness);

// `frame_00042`.
std::string frame_stem(int frame_index);
// `<dir>/frame_NNNNN.ppm`, else `.pgm`; nullopt when neither exists.
std::optional<std::filesystem::path> find_frame_image(const std::filesystem::path& dir, int frame_index);

struct RenderOptions {
    double sharpness = kDefaultSharpness;
    bool silhouettes = false;  // also write crop-space silhouettes as `sil_<track>_<frame>.pgm`
};

struct RenderSummary {
    std::vector<int> written;         // frames with an overlay
    std::vector<int> missing_images;  // frames with fitted birds but no image
    int silhouettes = 0;
};

// Writes `overlay_NNNNN.ppm` to `out_dir` for every frame with at least one present fitted bird.
RenderSummary render_overlays(const std::vector<FittedTrack>& tracks, const SkeletonModel& model,
                              const Camera& camera, const std::filesystem::path& frames_dir,
                              const std::filesystem::path& out_dir, const RenderOptions& options = {});

}  // namespace birdpose
