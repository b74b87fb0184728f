#include "mvhmr/body/rotation.hpp"

#include <Eigen/Geometry>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::body {

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& w) {
  const Tensor in = Tensor::from_vector({3}, {w[0], w[1], w[2]}, Dtype::f64);
  const Tensor r = ops::rodrigues(in);
  Eigen::Matrix3d R;
  for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = r.value(static_cast<std::size_t>(i));
  return R;
}

Eigen::Vector3d log_map(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.axis() * aa.angle();
}

Eigen::Matrix3d rotation_from_6d(const Vec6& six_d) {
  const Tensor in =
      Tensor::from_vector({6}, std::span<const double>(six_d.data(), 6), Dtype::f64);
  const Tensor r = ops::gram_schmidt(in);
  Eigen::Matrix3d R;
  for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = r.value(static_cast<std::size_t>(i));
  return R;
}

Vec6 rotation_to_6d(const Eigen::Matrix3d& rotation) {
  Vec6 v;
  v << rotation.col(0), rotation.col(1);
  return v;
}

}  // namespace mvhmr::body
