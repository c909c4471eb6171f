#include "birdpose/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace birdpose {

namespace {

void check_sharpness(double sharpness) {
    if (!(sharpness > 0.0)) throw Error(ErrorKind::InvalidArgument, "sharpness", "sharpness must be positive");
}

inline double inverse_length2(const ProjectedCapsule& c) {
    const double len2 = (c.b - c.a).squaredNorm();
    return len2 > 1e-18 ? 1.0 / len2 : 0.0;
}

struct Region {
    int col_lo, col_hi, row_lo, row_hi;
    int width() const { return col_hi - col_lo + 1; }
    int height() const { return row_hi - row_lo + 1; }
    bool empty() const { return col_hi < col_lo || row_hi < row_lo; }
    size_t index(int row, int col) const {
        return static_cast<size_t>(row - row_lo) * static_cast<size_t>(width()) + static_cast<size_t>(col - col_lo);
    }
};

Region union_region(const std::vector<ProjectedCapsule>& caps) {
    Region r{1 << 30, -1, 1 << 30, -1};
    for (const auto& c : caps) {
        if (c.col_hi < c.col_lo || c.row_hi < c.row_lo) continue;
        r.col_lo = std::min(r.col_lo, c.col_lo);
        r.col_hi = std::max(r.col_hi, c.col_hi);
        r.row_lo = std::min(r.row_lo, c.row_lo);
        r.row_hi = std::max(r.row_hi, c.row_hi);
    }
    return r;
}

// Calls visit(row, col, exp(z), t, nx, ny) for every pixel of the bone whose logit z is within the cutoff;
// t is the closest-point parameter on the segment and (nx, ny) the unit offset from it.
// Pixels with z above the cutoff are reported through saturated(row, col): there p_b is exactly 1.
template <typename Visit, typename Saturated>
void for_each_bone_pixel(const ProjectedCapsule& c, double sharpness, Visit&& visit, Saturated&& saturated) {
    const double inv_len2 = inverse_length2(c);
    const double ex = c.b.x() - c.a.x();
    const double ey = c.b.y() - c.a.y();
    const double margin = kOccupancyCutoff / sharpness;
    const double outer2 = (c.radius + margin) * (c.radius + margin);
    const double core = c.radius - margin;
    const double inner2 = core > 0.0 ? core * core : -1.0;
    for (int row = c.row_lo; row <= c.row_hi; ++row) {
        int lo, hi;
        if (!capsule_row_span(c, row, lo, hi)) continue;
        const double qy = row + 0.5 - c.a.y();
        for (int col = lo; col <= hi; ++col) {
            const double qx = col + 0.5 - c.a.x();
            const double t = std::clamp((qx * ex + qy * ey) * inv_len2, 0.0, 1.0);
            const double dx = qx - t * ex;
            const double dy = qy - t * ey;
            const double d2 = dx * dx + dy * dy;
            if (d2 > outer2) continue;
            if (d2 < inner2) {
                saturated(row, col);
                continue;
            }
            const double dist = std::sqrt(d2);
            const double inv = dist > 1e-300 ? 1.0 / dist : 0.0;
            visit(row, col, std::exp(sharpness * (c.radius - dist)), t, dx * inv, dy * inv);
        }
    }
}

// Product of (1 - p_b) over bones, for every pixel of `region`.
std::vector<double> complement_product(const std::vector<ProjectedCapsule>& caps, const Region& region,
                                       double sharpness) {
    std::vector<double> q(static_cast<size_t>(region.width()) * region.height(), 1.0);
    for (const auto& c : caps) {
        for_each_bone_pixel(
            c, sharpness,
            [&](int row, int col, double e, double, double, double) { q[region.index(row, col)] *= 1.0 / (1.0 + e); },
            [&](int row, int col) { q[region.index(row, col)] = 0.0; });
    }
    return q;
}

SoftSilhouette render_capsules(const std::vector<ProjectedCapsule>& caps, const Camera& camera, double sharpness) {
    SoftSilhouette out(camera.width, camera.height, 0.0);
    const Region region = union_region(caps);
    if (region.empty()) return out;
    const auto q = complement_product(caps, region, sharpness);
    for (int row = region.row_lo; row <= region.row_hi; ++row) {
        for (int col = region.col_lo; col <= region.col_hi; ++col) out.at(row, col) = 1.0 - q[region.index(row, col)];
    }
    return out;
}

}  // namespace

bool capsule_row_span(const ProjectedCapsule& c, int row, int& col_lo, int& col_hi) {
    const double y = row + 0.5;
    const double dy = c.b.y() - c.a.y();
    double s0 = 0.0, s1 = 1.0;
    if (std::abs(dy) > 1e-12) {
        s0 = (y - c.reach - c.a.y()) / dy;
        s1 = (y + c.reach - c.a.y()) / dy;
        if (s0 > s1) std::swap(s0, s1);
        s0 = std::max(s0, 0.0);
        s1 = std::min(s1, 1.0);
        if (s0 > s1) return false;
    } else if (std::abs(y - c.a.y()) > c.reach) {
        return false;
    }
    const double x0 = c.a.x() + s0 * (c.b.x() - c.a.x());
    const double x1 = c.a.x() + s1 * (c.b.x() - c.a.x());
    const double xlo = std::min(x0, x1) - c.reach - 0.5;
    const double xhi = std::max(x0, x1) + c.reach - 0.5;
    col_lo = std::max(c.col_lo, static_cast<int>(std::ceil(xlo)));
    col_hi = std::min(c.col_hi, static_cast<int>(std::floor(xhi)));
    return col_lo <= col_hi;
}

std::vector<ProjectedCapsule> project_capsules(const SkeletonModel& model, const Kinematics& kin, double sigma,
                                               const Camera& camera, double sharpness) {
    check_sharpness(sharpness);
    const Points2 px = project(camera, kin.joints);
    const double margin_px = kOccupancyCutoff / sharpness;
    std::vector<ProjectedCapsule> caps;
    caps.reserve(model.num_joints());
    for (int j = 1; j < model.num_joints(); ++j) {
        ProjectedCapsule c;
        c.joint = j;
        c.parent = model.joints[j].parent;
        c.a = px.row(c.parent).transpose();
        c.b = px.row(j).transpose();
        c.radius = sigma * model.bone_radii[j] * camera.focal / camera.fixed_depth;
        c.reach = c.radius + margin_px;
        // Pixel centre (col + 0.5) must lie within `reach` of the segment's bounding box.
        const double xlo = std::min(c.a.x(), c.b.x()) - c.reach - 0.5;
        const double xhi = std::max(c.a.x(), c.b.x()) + c.reach - 0.5;
        const double ylo = std::min(c.a.y(), c.b.y()) - c.reach - 0.5;
        const double yhi = std::max(c.a.y(), c.b.y()) + c.reach - 0.5;
        c.col_lo = static_cast<int>(std::clamp(std::ceil(xlo), 0.0, double(camera.width)));
        c.col_hi = static_cast<int>(std::clamp(std::floor(xhi), -1.0, double(camera.width - 1)));
        c.row_lo = static_cast<int>(std::clamp(std::ceil(ylo), 0.0, double(camera.height)));
        c.row_hi = static_cast<int>(std::clamp(std::floor(yhi), -1.0, double(camera.height - 1)));
        caps.push_back(c);
    }
    return caps;
}

SoftSilhouette render_soft_silhouette(const SkeletonModel& model, const PoseParams& pose, const Camera& camera,
                                      double sharpness) {
    camera.validate();
    const Kinematics kin = forward_kinematics(model, pose);
    return render_capsules(project_capsules(model, kin, pose.sigma, camera, sharpness), camera, sharpness);
}

SoftSilhouette render_bone_occupancy(const SkeletonModel& model, const PoseParams& pose, const Camera& camera,
                                     int joint, double sharpness) {
    if (joint < 1 || joint >= model.num_joints()) {
        throw Error(ErrorKind::InvalidArgument, "joint", "no bone ends at joint " + std::to_string(joint));
    }
    camera.validate();
    const Kinematics kin = forward_kinematics(model, pose);
    const auto caps = project_capsules(model, kin, pose.sigma, camera, sharpness);
    return render_capsules({caps[joint - 1]}, camera, sharpness);
}

MaskLossGradient mask_loss_with_gradient(const SkeletonModel& model, const Kinematics& kin, double sigma,
                                         const Camera& camera, double sharpness, const BinaryMask& target) {
    if (target.width != camera.width || target.height != camera.height) {
        throw Error(ErrorKind::DimensionMismatch, "mask",
                    "target mask is " + std::to_string(target.width) + "x" + std::to_string(target.height) +
                        ", camera renders " + std::to_string(camera.width) + "x" + std::to_string(camera.height));
    }
    const auto caps = project_capsules(model, kin, sigma, camera, sharpness);
    const double inv_n = 1.0 / (static_cast<double>(camera.width) * camera.height);

    MaskLossGradient res;
    res.grad_joints = Points3::Zero(model.num_joints(), 3);

    const long long target_total =
        static_cast<long long>(target.data.size()) - std::count(target.data.begin(), target.data.end(), 0);

    const Region region = union_region(caps);
    if (region.empty()) {
        res.value = target_total * inv_n;
        return res;
    }

    // Pass 1: complement products, caching every visited bone pixel for the backward pass.
    struct Visit {
        size_t index;
        double qb;  // 1 - p_b
        double pq;  // p_b (1 - p_b)
        double t;
        double nx, ny;
    };
    std::vector<Visit> visits;
    size_t window_area = 0;
    for (const auto& c : caps) {
        if (c.col_hi >= c.col_lo && c.row_hi >= c.row_lo)
            window_area += static_cast<size_t>(c.col_hi - c.col_lo + 1) * (c.row_hi - c.row_lo + 1);
    }
    visits.reserve(window_area);
    std::vector<size_t> bone_end(caps.size());
    std::vector<double> q(static_cast<size_t>(region.width()) * region.height(), 1.0);
    for (size_t b = 0; b < caps.size(); ++b) {
        for_each_bone_pixel(caps[b], sharpness,
                            [&](int row, int col, double e, double t, double nx, double ny) {
                                const size_t i = region.index(row, col);
                                const double qb = 1.0 / (1.0 + e);
                                q[i] *= qb;
                                visits.push_back({i, qb, e * qb * qb, t, nx, ny});
                            },
                            [&](int row, int col) { q[region.index(row, col)] = 0.0; });
        bone_end[b] = visits.size();
    }

    // dL/dv per region pixel.
    std::vector<double> g_v(q.size());
    double sum = 0.0;
    long long target_inside = 0;
    for (int row = region.row_lo; row <= region.row_hi; ++row) {
        for (int col = region.col_lo; col <= region.col_hi; ++col) {
            const size_t i = region.index(row, col);
            const bool on = target.at(row, col) != 0;
            target_inside += on ? 1 : 0;
            const double diff = (1.0 - q[i]) - (on ? 1.0 : 0.0);
            sum += std::abs(diff);
            g_v[i] = diff > 0.0 ? inv_n : (diff < 0.0 ? -inv_n : 0.0);
        }
    }
    res.value = (sum + static_cast<double>(target_total - target_inside)) * inv_n;

    // Pass 2: v = 1 - qb * others  =>  dv/dz = others * p_b * qb.
    const double px_per_unit = camera.focal / camera.fixed_depth;
    Points2 grad_px = Points2::Zero(model.num_joints(), 2);
    size_t begin = 0;
    for (size_t b = 0; b < caps.size(); ++b) {
        double gax = 0.0, gay = 0.0, gbx = 0.0, gby = 0.0, gr = 0.0;
        for (size_t k = begin; k < bone_end[b]; ++k) {
            const Visit& v = visits[k];
            if (v.qb == 0.0 || g_v[v.index] == 0.0) continue;  // saturated bone: dv/dz underflows
            const double others = q[v.index] / v.qb;
            const double g_z = g_v[v.index] * others * v.pq * sharpness;
            gr += g_z;
            // z depends on -dist; d(dist)/da = -(1 - t) n, d(dist)/db = -t n
            gax += g_z * (1.0 - v.t) * v.nx;
            gay += g_z * (1.0 - v.t) * v.ny;
            gbx += g_z * v.t * v.nx;
            gby += g_z * v.t * v.ny;
        }
        begin = bone_end[b];
        const auto& c = caps[b];
        grad_px(c.parent, 0) += gax;
        grad_px(c.parent, 1) += gay;
        grad_px(c.joint, 0) += gbx;
        grad_px(c.joint, 1) += gby;
        res.grad_sigma += gr * model.bone_radii[c.joint] * px_per_unit;
    }
    res.grad_joints = project_backward(camera, kin.joints, grad_px);
    return res;
}

}  // namespace birdpose
