#pragma once

#include <span>
#include <vector>

#include "birdpose/common.hpp"
#include "birdpose/observation.hpp"

namespace birdpose {

// Weighted median: the first sorted value at which the cumulative weight reaches half the total.
// Falls back to the lower unweighted median when every weight is zero.
double weighted_median(std::span<const double> values, std::span<const double> weights);

// Filters x and y of every keypoint independently over a centred window (truncated at the ends).
// Output confidence is the centre frame's confidence. `window` must be odd and >= 1.
std::vector<KeypointSet> weighted_median_filter(std::span<const KeypointSet> track, int window = 5);

// Dilation with a width x width square; a single pixel grows to columns/rows [p - width/2, p + width - 1 - width/2].
BinaryMask dilate_square(const BinaryMask& mask, int width);

struct CropOptions {
    int pad = 40;        // per-side bbox padding, original pixels
    int dilation = 70;   // square structuring element width
    int crop_size = kCropSize;

    void validate() const;
};

struct CropResult {
    ObservationFrame frame;
    BinaryMask support;  // dilated mask in crop space, for masking image pixels
};

// Pads `bbox`, pads the result to a square, and resamples into a crop_size x crop_size crop.
// `mask` is full-image sized; an empty mask marks the frame missing.
CropResult normalize_crop(const BBox& bbox, const BinaryMask& mask, const KeypointSet& keypoints, int frame_index,
                          const CropOptions& options = {});

// Nearest-neighbour crop of an image through `crop`, with pixels outside `support` zeroed.
GrayImage masked_crop(const GrayImage& image, const CropTransform& crop, const BinaryMask& support);

}  // namespace birdpose
