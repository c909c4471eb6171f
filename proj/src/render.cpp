#include "birdpose/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "birdpose/io.hpp"

namespace birdpose {

Rgb track_color(int track_id) {
    static constexpr Rgb palette[] = {{230, 25, 75},  {60, 180, 75},  {255, 225, 25}, {0, 130, 200},
                                      {245, 130, 48}, {145, 30, 180}, {70, 240, 240}, {240, 50, 230}};
    constexpr int n = sizeof(palette) / sizeof(palette[0]);
    return palette[((track_id % n) + n) % n];
}

GrayImage silhouette_image(const SoftSilhouette& silhouette) {
    GrayImage out(silhouette.width, silhouette.height);
    for (size_t i = 0; i < silhouette.data.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(silhouette.data[i], 0.0, 1.0) * 255.0));
    }
    return out;
}

void set_pixel(RgbImage& image, int row, int col, const Rgb& color) {
    if (row < 0 || col < 0 || row >= image.height || col >= image.width) return;
    const size_t i = (static_cast<size_t>(row) * image.width + col) * 3;
    image.data[i] = color[0];
    image.data[i + 1] = color[1];
    image.data[i + 2] = color[2];
}

void draw_line(RgbImage& image, const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Rgb& color) {
    if (!a.allFinite() || !b.allFinite()) return;
    const double len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(2.0 * std::min(len, 1e5))));
    for (int s = 0; s <= steps; ++s) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(s) / steps);
        set_pixel(image, static_cast<int>(std::floor(p.y())), static_cast<int>(std::floor(p.x())), color);
    }
}

void draw_marker(RgbImage& image, const Eigen::Vector2d& p, int half, const Rgb& color) {
    if (!p.allFinite() || std::abs(p.x()) > 1e9 || std::abs(p.y()) > 1e9) return;
    const int r0 = static_cast<int>(std::floor(p.y()));
    const int c0 = static_cast<int>(std::floor(p.x()));
    for (int r = r0 - half; r <= r0 + half; ++r) {
        for (int c = c0 - half; c <= c0 + half; ++c) set_pixel(image, r, c, color);
    }
}

Points2 draw_fitted_bird(RgbImage& image, const SkeletonModel& model, const Camera& camera,
                         const ObservationFrame& obs, const PoseParams& pose, const Rgb& color, double sharpness) {
    const CropTransform& crop = obs.crop;
    if (!(crop.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "crop.scale", "must be positive");
    const SoftSilhouette sil = render_soft_silhouette(model, pose, camera, sharpness);

    // Image pixels covered by the crop, one pixel of margin so the outline closes at the border.
    const Eigen::Vector2d lo = crop.invert({0.0, 0.0});
    const Eigen::Vector2d hi = crop.invert({static_cast<double>(sil.width), static_cast<double>(sil.height)});
    const int c0 = std::max(0, static_cast<int>(std::floor(lo.x())) - 1);
    const int r0 = std::max(0, static_cast<int>(std::floor(lo.y())) - 1);
    const int c1 = std::min(image.width - 1, static_cast<int>(std::ceil(hi.x())) + 1);
    const int r1 = std::min(image.height - 1, static_cast<int>(std::ceil(hi.y())) + 1);
    if (c1 >= c0 && r1 >= r0) {
        const int w = c1 - c0 + 1, h = r1 - r0 + 1;
        BinaryMask inside(w, h, 0);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const Eigen::Vector2d q = crop.apply({c0 + c + 0.5, r0 + r + 0.5});
                const int qc = static_cast<int>(std::floor(q.x())), qr = static_cast<int>(std::floor(q.y()));
                if (qc < 0 || qr < 0 || qc >= sil.width || qr >= sil.height) continue;
                inside.at(r, c) = sil.at(qr, qc) >= 0.5;
            }
        }
        auto in = [&](int r, int c) { return r >= 0 && c >= 0 && r < h && c < w && inside.at(r, c); };
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (in(r, c) && (!in(r - 1, c) || !in(r + 1, c) || !in(r, c - 1) || !in(r, c + 1))) {
                    set_pixel(image, r0 + r, c0 + c, color);
                }
            }
        }
    }

    const Kinematics kin = forward_kinematics(model, pose);
    const Points2 joints = project(camera, kin.joints);
    for (int j = 0; j < model.num_joints(); ++j) {
        const int p = model.joints[j].parent;
        if (p < 0) continue;
        draw_line(image, crop.invert(joints.row(p).transpose()), crop.invert(joints.row(j).transpose()), color);
    }
    const Points2 kp = project(camera, kin.keypoints);
    Points2 out(kp.rows(), 2);
    for (Eigen::Index k = 0; k < kp.rows(); ++k) {
        out.row(k) = crop.invert(kp.row(k).transpose()).transpose();
        draw_marker(image, out.row(k).transpose(), 1, color);
    }
    return out;
}

std::string frame_stem(int frame_index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d", frame_index);
    return buf;
}

std::optional<fs::path> find_frame_image(const fs::path& dir, int frame_index) {
    for (const char* ext : {".ppm", ".pgm"}) {
        fs::path p = dir / (frame_stem(frame_index) + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

RenderSummary render_overlays(const std::vector<FittedTrack>& tracks, const SkeletonModel& model,
                              const Camera& camera, const fs::path& frames_dir, const fs::path& out_dir,
                              const RenderOptions& options) {
    struct Item {
        const FittedTrack* track;
        size_t t;
    };
    std::map<int, std::vector<Item>> by_frame;
    for (const auto& tr : tracks) {
        if (tr.fit.poses.size() != tr.observations.size()) {
            throw Error(ErrorKind::DimensionMismatch, "track " + std::to_string(tr.track_id),
                        "poses and observations differ in length");
        }
        for (size_t t = 0; t < tr.observations.size(); ++t) {
            if (!tr.observations[t].missing) by_frame[tr.observations[t].frame_index].push_back({&tr, t});
        }
    }
    RenderSummary summary;
    if (by_frame.empty()) return summary;
    fs::create_directories(out_dir);
    for (const auto& [frame, items] : by_frame) {
        if (options.silhouettes) {
            for (const auto& it : items) {
                const auto sil =
                    render_soft_silhouette(model, it.track->fit.poses[it.t], camera, options.sharpness);
                write_pgm(out_dir / ("sil_" + std::to_string(it.track->track_id) + "_" +
                                     frame_stem(frame).substr(6) + ".pgm"),
                          silhouette_image(sil));
                ++summary.silhouettes;
            }
        }
        const auto path = find_frame_image(frames_dir, frame);
        if (!path) {
            summary.missing_images.push_back(frame);
            continue;
        }
        RgbImage image = read_rgb(*path);
        for (const auto& it : items) {
            draw_fitted_bird(image, model, camera, it.track->observations[it.t], it.track->fit.poses[it.t],
                             track_color(it.track->track_id), options.sharpness);
        }
        write_ppm(out_dir / ("overlay_" + frame_stem(frame).substr(6) + ".ppm"), image);
        summary.written.push_back(frame);
    }
    return summary;
}

}  // namespace birdpose
