#include "birdpose/common.hpp"

namespace birdpose {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::NonPositiveDepth: return "non_positive_depth";
        case ErrorKind::Uninitializable: return "uninitializable";
        case ErrorKind::NumericalFailure: return "numerical_failure";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, std::string field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message), kind_(kind), field_(std::move(field)), message_(message) {}

std::optional<BBox> mask_bbox(const BinaryMask& mask) {
    int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
    for (int r = 0; r < mask.height; ++r) {
        for (int c = 0; c < mask.width; ++c) {
            if (!mask.at(r, c)) continue;
            x0 = std::min(x0, c);
            x1 = std::max(x1, c);
            y0 = std::min(y0, r);
            y1 = std::max(y1, r);
        }
    }
    if (x1 < 0) return std::nullopt;
    return BBox{double(x0), double(y0), double(x1 + 1), double(y1 + 1)};
}

}  // namespace birdpose
