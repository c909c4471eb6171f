#pragma once

#include <Eigen/Core>

namespace birdpose {

// Skew-symmetric cross-product matrix, skew(v) * x == v.cross(x).
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Rotation matrix of an axis-angle vector (Rodrigues' formula, series-expanded near zero).
Eigen::Matrix3d axis_angle_to_matrix(const Eigen::Vector3d& axis_angle);

// Pulls dL/dR back to dL/d(axis_angle) for R = axis_angle_to_matrix(axis_angle).
Eigen::Vector3d axis_angle_backward(const Eigen::Vector3d& axis_angle, const Eigen::Matrix3d& grad_rotation);

// Principal axis-angle vector (angle in [0, pi]) of a rotation matrix.
Eigen::Vector3d matrix_to_axis_angle(const Eigen::Matrix3d& rotation);

}  // namespace birdpose
