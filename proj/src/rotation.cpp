#include "birdpose/rotation.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace birdpose {

namespace {

// R = I + a K + b K^2 with K = skew(w), t = |w|.
// ca = a'(t)/t and cb = b'(t)/t drive the backward pass.
struct RodriguesCoefficients {
    double a;
    double b;
    double ca;
    double cb;
};

RodriguesCoefficients rodrigues_coefficients(double t) {
    const double t2 = t * t;
    if (t < 0.05) {
        const double t4 = t2 * t2;
        const double t6 = t4 * t2;
        return {1.0 - t2 / 6.0 + t4 / 120.0 - t6 / 5040.0,
                0.5 - t2 / 24.0 + t4 / 720.0 - t6 / 40320.0,
                -1.0 / 3.0 + t2 / 30.0 - t4 / 840.0,
                -1.0 / 12.0 + t2 / 180.0 - t4 / 6720.0};
    }
    const double s = std::sin(t);
    const double c = std::cos(t);
    return {s / t, (1.0 - c) / t2, (t * c - s) / (t2 * t), (t * s - 2.0 * (1.0 - c)) / (t2 * t2)};
}

// <G, skew(e_k)> for k = 0..2.
Eigen::Vector3d skew_inner(const Eigen::Matrix3d& g) {
    return {g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1)};
}

}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d k;
    k << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return k;
}

Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& axis_angle) {
    const auto coef = rodrigues_coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    return Eigen::Matrix3d::Identity() + coef.a * k + coef.b * (k * k);
}

Eigen::Vector3d axis_angle_backward(const Eigen::Vector3d& axis_angle, const Eigen::Matrix3d& grad_rotation) {
    const auto coef = rodrigues_coefficients(axis_angle.norm());
    const Eigen::Matrix3d k = skew(axis_angle);
    const Eigen::Matrix3d& g = grad_rotation;

    // dR/dw_k = ca w_k K + a E_k + cb w_k K^2 + b (E_k K + K E_k),  E_k = skew(e_k)
    const double g_dot_k = (g.array() * k.array()).sum();
    const double g_dot_kk = (g.array() * (k * k).array()).sum();
    const Eigen::Vector3d via_e = skew_inner(g);
    // <G, E_k K> = <G K^T, E_k> = -<G K, E_k>, likewise <G, K E_k> = -<K G, E_k>.
    const Eigen::Vector3d via_ek = -skew_inner(g * k) - skew_inner(k * g);

    return (coef.ca * g_dot_k + coef.cb * g_dot_kk) * axis_angle + coef.a * via_e + coef.b * via_ek;
}

Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& rotation) {
    const Eigen::AngleAxisd aa(rotation);
    return aa.angle() * aa.axis();
}

}  // namespace birdpose
