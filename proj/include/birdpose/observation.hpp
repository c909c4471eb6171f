#pragma once

#include <Eigen/Core>

#include "birdpose/common.hpp"

namespace birdpose {

inline constexpr int kCropSize = 256;

// Uniform-scale affine map from original image pixels into crop space: crop = scale * image + offset.
struct CropTransform {
    double scale = 1.0;
    Eigen::Vector2d offset = Eigen::Vector2d::Zero();

    Eigen::Vector2d apply(const Eigen::Vector2d& image_pt) const { return scale * image_pt + offset; }
    Eigen::Vector2d invert(const Eigen::Vector2d& crop_pt) const { return (crop_pt - offset) / scale; }

    friend bool operator==(const CropTransform&, const CropTransform&) = default;
};

// One bird in one frame, in crop space.
struct ObservationFrame {
    int frame_index = 0;
    KeypointSet keypoints;  // K x (x, y, confidence)
    BinaryMask mask;        // crop-resolution target silhouette; empty when missing
    BBox bbox;              // tight mask box in original image pixels
    CropTransform crop;
    bool missing = false;   // no detection for this frame

    // Throws Error(Validation) on out-of-range confidences, a malformed bbox, or a mask of the wrong size.
    void validate(int crop_width = kCropSize, int crop_height = kCropSize) const;
};

}  // namespace birdpose
