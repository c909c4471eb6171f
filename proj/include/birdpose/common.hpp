#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace birdpose {

using Points3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Points2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
// Rows of (x, y, confidence).
using KeypointSet = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

enum class ErrorKind {
    DimensionMismatch,
    InvalidArgument,
    NonPositiveDepth,
    Uninitializable,
    NumericalFailure,
    Validation,
    Parse,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Structured error. `field` names the offending input where one exists.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string field, const std::string& message);

    ErrorKind kind() const { return kind_; }
    const std::string& field() const { return field_; }
    const std::string& message() const { return message_; }

private:
    ErrorKind kind_;
    std::string field_;
    std::string message_;
};

// Axis-aligned box in pixel coordinates, [x0, x1) x [y0, y1).
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    double longest_side() const { return width() > height() ? width() : height(); }
    bool well_ordered() const { return x1 > x0 && y1 > y0; }

    friend bool operator==(const BBox&, const BBox&) = default;
};

// Row-major H x W raster. Pixel (row, col) covers [col, col+1) x [row, row+1).
template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    T& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
    const T& at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
    bool empty() const { return data.empty(); }
    bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using BinaryMask = Grid<std::uint8_t>;
using GrayImage = Grid<std::uint8_t>;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // interleaved RGB

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}
};

// Tight bounding box of the nonzero pixels; nullopt for an empty mask.
std::optional<BBox> mask_bbox(const BinaryMask& mask);

}  // namespace birdpose
