#pragma once

#include <Eigen/Core>

namespace mvhmr::body {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// exp map; series-guarded near zero.
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& axis_angle);

// Inverse of rodrigues with angle in [0, pi].
Eigen::Vector3d log_map(const Eigen::Matrix3d& rotation);

// Columns b1, b2, b3 from the two stacked 3-vectors; same degenerate rule as
// ops::gram_schmidt.
Eigen::Matrix3d rotation_from_6d(const Vec6& six_d);

// First two columns of `rotation`, stacked.
Vec6 rotation_to_6d(const Eigen::Matrix3d& rotation);

}  // namespace mvhmr::body
