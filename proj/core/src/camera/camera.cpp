#include "mvhmr/camera/camera.hpp"

#include <string>

#include "mvhmr/body/rotation.hpp"
#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::camera {

Eigen::Matrix3d CameraPose::rotation() const { return body::rodrigues(R); }

void Intrinsics::validate() const {
  if (!(focal > 0)) throw std::invalid_argument("intrinsics: focal must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
  if (!(cx >= 0 && cx <= width && cy >= 0 && cy <= height)) {
    throw std::invalid_argument("intrinsics: principal point (" + std::to_string(cx) + ", " +
                                std::to_string(cy) + ") lies outside the image");
  }
}

ProjectionError::ProjectionError(std::size_t index, double z)
    : std::domain_error("project: point " + std::to_string(index) + " has camera depth " +
                        std::to_string(z) + " m, at or below the minimum " + std::to_string(kZMin)),
      index_(index) {}

MatX3 to_camera(const MatX3& points, const CameraPose& pose) {
  const Eigen::Matrix3d R = pose.rotation();
  MatX3 out = points * R.transpose();
  out.rowwise() += pose.t.transpose();
  return out;
}

MatX2 project_camera_frame(const MatX3& p, const Intrinsics& K) {
  MatX2 uv(p.rows(), 2);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double z = p(i, 2);
    if (!(z > kZMin)) throw ProjectionError(static_cast<std::size_t>(i), z);
    uv(i, 0) = K.focal * p(i, 0) / z + K.cx;
    uv(i, 1) = K.focal * p(i, 1) / z + K.cy;
  }
  return uv;
}

MatX2 project(const MatX3& points, const CameraPose& pose, const Intrinsics& K) {
  return project_camera_frame(to_camera(points, pose), K);
}

Eigen::Vector3d back_project(const Eigen::Vector2d& uv, double depth, const CameraPose& pose,
                             const Intrinsics& K) {
  const Eigen::Vector3d pc((uv.x() - K.cx) * depth / K.focal, (uv.y() - K.cy) * depth / K.focal, depth);
  return pose.rotation().transpose() * (pc - pose.t);
}

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d view = target - eye;
  if (view.norm() < 1e-12) throw std::invalid_argument("look_at: eye and target coincide");
  const Eigen::Vector3d z = view.normalized();
  const Eigen::Vector3d up_perp = up - up.dot(z) * z;
  if (up_perp.norm() < 1e-9 * std::max(1.0, up.norm())) {
    throw std::invalid_argument("look_at: up vector is parallel to the viewing direction");
  }
  const Eigen::Vector3d y = -up_perp.normalized();
  const Eigen::Vector3d x = y.cross(z);
  Eigen::Matrix3d R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  CameraPose pose;
  pose.R = body::log_map(R);
  // Recompute from the stored axis-angle so R and t agree to rounding.
  pose.t = -pose.rotation() * eye;
  return pose;
}

MatX2 normalize_pixels(const MatX2& uv, const Intrinsics& K) {
  MatX2 n(uv.rows(), 2);
  n.col(0) = uv.col(0) * (2.0 / K.width) - Eigen::VectorXd::Ones(uv.rows());
  n.col(1) = uv.col(1) * (2.0 / K.height) - Eigen::VectorXd::Ones(uv.rows());
  return n;
}

Tensor to_camera(const Tensor& points, const Tensor& rotation, const Tensor& t) {
  if (points.dim() != 3 || points.size(2) != 3 || rotation.dim() != 3 || t.dim() != 2 ||
      rotation.size(0) != points.size(0) || t.size(0) != points.size(0)) {
    throw ShapeError("to_camera: expected points [B, k, 3], rotation [B, 3, 3], t [B, 3], got " +
                     shape_str(points.shape()) + ", " + shape_str(rotation.shape()) + ", " +
                     shape_str(t.shape()));
  }
  const auto B = static_cast<std::int64_t>(points.size(0));
  return ops::bmm(points, ops::transpose(rotation, 1, 2)) + ops::reshape(t, {B, 1, 3});
}

TensorProjection project(const Tensor& points_cam, const Intrinsics& K, bool clamp) {
  if (points_cam.dim() != 3 || points_cam.size(2) != 3) {
    throw ShapeError("project: expected camera-frame points [B, k, 3], got " +
                     shape_str(points_cam.shape()));
  }
  TensorProjection out;
  Tensor z = ops::slice(points_cam, 2, 2, 3);
  const std::size_t n = z.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const double zi = z.value(i);
    if (!(zi > kZMin)) {
      if (!clamp) throw ProjectionError(i, zi);
      out.clamped = true;
    }
  }
  if (out.clamped) z = ops::clamp_min(z, kZMin);
  const Tensor xy = ops::slice(points_cam, 2, 0, 2);
  const Tensor c = Tensor::from_vector({2}, {K.cx, K.cy}, points_cam.dtype());
  out.uv = ops::mul_scalar(xy / z, K.focal) + c;
  return out;
}

Tensor normalize_pixels(const Tensor& uv, const Intrinsics& K) {
  const Tensor scale = Tensor::from_vector({2}, {2.0 / K.width, 2.0 / K.height}, uv.dtype());
  return ops::add_scalar(uv * scale, -1.0);
}

}  // namespace mvhmr::camera
