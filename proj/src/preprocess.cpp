#include "birdpose/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace birdpose {

double weighted_median(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw Error(ErrorKind::DimensionMismatch, "weights",
                    std::to_string(values.size()) + " values vs " + std::to_string(weights.size()) + " weights");
    }
    if (values.empty()) throw Error(ErrorKind::InvalidArgument, "values", "weighted median of an empty window");

    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), size_t{0});
    // Stable so that equal values keep their temporal order; the selected value is the same either way.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });

    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw Error(ErrorKind::InvalidArgument, "weights", "weights must be non-negative");
        total += w;
    }
    if (total <= 0.0) return values[order[(order.size() - 1) / 2]];

    const double half = 0.5 * total;
    double cum = 0.0;
    for (size_t i : order) {
        cum += weights[i];
        if (cum >= half) return values[i];
    }
    return values[order.back()];
}

std::vector<KeypointSet> weighted_median_filter(std::span<const KeypointSet> track, int window) {
    if (window < 1 || window % 2 == 0) {
        throw Error(ErrorKind::InvalidArgument, "window", "window must be odd and >= 1, got " + std::to_string(window));
    }
    std::vector<KeypointSet> out(track.begin(), track.end());
    if (track.empty() || window == 1) return out;
    const Eigen::Index k = track[0].rows();
    for (size_t t = 0; t < track.size(); ++t) {
        if (track[t].rows() != k) {
            throw Error(ErrorKind::DimensionMismatch, "track[" + std::to_string(t) + "]",
                        std::to_string(track[t].rows()) + " keypoints, expected " + std::to_string(k));
        }
    }

    const long half = window / 2;
    const long n = static_cast<long>(track.size());
    std::vector<double> vals, weights;
    for (long t = 0; t < n; ++t) {
        const long lo = std::max(0L, t - half);
        const long hi = std::min(n - 1, t + half);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (int axis = 0; axis < 2; ++axis) {
                vals.clear();
                weights.clear();
                for (long s = lo; s <= hi; ++s) {
                    vals.push_back(track[s](i, axis));
                    weights.push_back(track[s](i, 2));
                }
                out[t](i, axis) = weighted_median(vals, weights);
            }
        }
    }
    return out;
}

namespace {

// out[i] = any(in[i - before .. i + after]) along one axis, via a running count.
void dilate_line(const std::uint8_t* in, std::uint8_t* out, int n, int stride, int before, int after) {
    std::vector<int> prefix(n + 1, 0);
    for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (in[static_cast<size_t>(i) * stride] ? 1 : 0);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - before);
        const int hi = std::min(n - 1, i + after);
        out[static_cast<size_t>(i) * stride] = prefix[hi + 1] - prefix[lo] > 0 ? 1 : 0;
    }
}

}  // namespace

BinaryMask dilate_square(const BinaryMask& mask, int width) {
    if (width < 1) throw Error(ErrorKind::InvalidArgument, "dilation", "dilation width must be >= 1");
    // A pixel p lights [p - width/2, p + width - 1 - width/2], so output q looks at inputs [q - after, q + before].
    const int before = width - 1 - width / 2;
    const int after = width / 2;
    BinaryMask rows(mask.width, mask.height, 0);
    for (int r = 0; r < mask.height; ++r) {
        dilate_line(&mask.data[static_cast<size_t>(r) * mask.width], &rows.data[static_cast<size_t>(r) * mask.width],
                    mask.width, 1, before, after);
    }
    BinaryMask out(mask.width, mask.height, 0);
    for (int c = 0; c < mask.width; ++c) {
        dilate_line(&rows.data[c], &out.data[c], mask.height, mask.width, before, after);
    }
    return out;
}

void CropOptions::validate() const {
    if (pad < 0) throw Error(ErrorKind::Validation, "pad", "padding must be >= 0");
    if (dilation < 1) throw Error(ErrorKind::Validation, "dilation", "dilation width must be >= 1");
    if (crop_size < 1) throw Error(ErrorKind::Validation, "crop_size", "crop size must be >= 1");
}

CropResult normalize_crop(const BBox& bbox, const BinaryMask& mask, const KeypointSet& keypoints, int frame_index,
                          const CropOptions& options) {
    options.validate();
    if (mask.empty()) throw Error(ErrorKind::InvalidArgument, "mask", "mask has no pixels");
    if (!bbox.well_ordered()) throw Error(ErrorKind::InvalidArgument, "bbox", "bbox must satisfy x1 > x0 and y1 > y0");
    if (bbox.x1 <= 0.0 || bbox.y1 <= 0.0 || bbox.x0 >= mask.width || bbox.y0 >= mask.height) {
        throw Error(ErrorKind::InvalidArgument, "bbox", "bbox does not intersect the image");
    }

    const BBox padded{std::max(0.0, bbox.x0 - options.pad), std::max(0.0, bbox.y0 - options.pad),
                      std::min<double>(mask.width, bbox.x1 + options.pad),
                      std::min<double>(mask.height, bbox.y1 + options.pad)};
    const double side = padded.longest_side();
    const double sx0 = padded.x0 - 0.5 * (side - padded.width());
    const double sy0 = padded.y0 - 0.5 * (side - padded.height());

    CropResult res;
    ObservationFrame& f = res.frame;
    f.frame_index = frame_index;
    f.bbox = bbox;
    f.crop.scale = options.crop_size / side;
    f.crop.offset = -f.crop.scale * Eigen::Vector2d(sx0, sy0);
    f.keypoints = keypoints;
    for (Eigen::Index i = 0; i < keypoints.rows(); ++i) {
        const Eigen::Vector2d p = f.crop.apply(Eigen::Vector2d(keypoints(i, 0), keypoints(i, 1)));
        f.keypoints(i, 0) = p.x();
        f.keypoints(i, 1) = p.y();
    }

    f.missing = std::none_of(mask.data.begin(), mask.data.end(), [](std::uint8_t v) { return v != 0; });
    if (f.missing) return res;

    const BinaryMask dilated = dilate_square(mask, options.dilation);
    const int n = options.crop_size;
    f.mask = BinaryMask(n, n, 0);
    res.support = BinaryMask(n, n, 0);
    for (int r = 0; r < n; ++r) {
        const double y = sy0 + (r + 0.5) / f.crop.scale;
        if (y < padded.y0 || y >= padded.y1) continue;
        const int ir = static_cast<int>(std::floor(y));
        for (int c = 0; c < n; ++c) {
            const double x = sx0 + (c + 0.5) / f.crop.scale;
            if (x < padded.x0 || x >= padded.x1) continue;
            const int ic = static_cast<int>(std::floor(x));
            f.mask.at(r, c) = mask.at(ir, ic) ? 1 : 0;
            res.support.at(r, c) = dilated.at(ir, ic);
        }
    }
    return res;
}

GrayImage masked_crop(const GrayImage& image, const CropTransform& crop, const BinaryMask& support) {
    GrayImage out(support.width, support.height, 0);
    for (int r = 0; r < support.height; ++r) {
        for (int c = 0; c < support.width; ++c) {
            if (!support.at(r, c)) continue;
            const Eigen::Vector2d p = crop.invert(Eigen::Vector2d(c + 0.5, r + 0.5));
            const int ic = static_cast<int>(std::floor(p.x()));
            const int ir = static_cast<int>(std::floor(p.y()));
            if (ic < 0 || ir < 0 || ic >= image.width || ir >= image.height) continue;
            out.at(r, c) = image.at(ir, ic);
        }
    }
    return out;
}

}  // namespace birdpose
