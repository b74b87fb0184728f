#pragma once

#include <stdexcept>

#include <Eigen/Core>

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr::camera {

using MatX2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;
using body::MatX3;

// Points closer than this to the camera plane cannot be projected.
inline constexpr double kZMin = 1e-3;

// Extrinsics mapping canonical points into the camera frame: x_c = R x + t.
// OpenCV axes: +z forward, +y down, +x right.
struct CameraPose {
  Eigen::Vector3d R = Eigen::Vector3d::Zero();  // axis-angle, radians
  Eigen::Vector3d t = Eigen::Vector3d::Zero();  // metres

  Eigen::Matrix3d rotation() const;
};

struct Intrinsics {
  double focal = 100.0;
  double cx = 32.0;
  double cy = 32.0;
  int height = 64;
  int width = 64;

  // Throws std::invalid_argument unless focal > 0 and the principal point lies
  // inside the image.
  void validate() const;
};

class ProjectionError : public std::domain_error {
 public:
  ProjectionError(std::size_t index, double z);
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

MatX3 to_camera(const MatX3& points, const CameraPose& pose);

// Pinhole projection of camera-frame points. Throws ProjectionError naming the
// first point with z <= kZMin.
MatX2 project_camera_frame(const MatX3& points_cam, const Intrinsics& K);
MatX2 project(const MatX3& points, const CameraPose& pose, const Intrinsics& K);

// Canonical point whose projection is `uv` at camera-frame depth `depth`.
Eigen::Vector3d back_project(const Eigen::Vector2d& uv, double depth, const CameraPose& pose,
                             const Intrinsics& K);

// Pose viewing `target` from `eye` with image "up" along `up`. Throws
// std::invalid_argument when eye == target or up is parallel to the view axis.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

// Pixel coordinates mapped to [-1, 1] over the image extent.
MatX2 normalize_pixels(const MatX2& uv, const Intrinsics& K);

// Differentiable forms. points: [B, k, 3]; rotation: [B, 3, 3]; t: [B, 3].
Tensor to_camera(const Tensor& points, const Tensor& rotation, const Tensor& t);

struct TensorProjection {
  Tensor uv;             // [B, k, 2] pixels
  bool clamped = false;  // some depth was raised to kZMin
};

// Training variant clamps depth at kZMin and reports it; the strict variant
// throws ProjectionError instead.
TensorProjection project(const Tensor& points_cam, const Intrinsics& K, bool clamp);

// [B, k, 2] pixels -> [-1, 1].
Tensor normalize_pixels(const Tensor& uv, const Intrinsics& K);

}  // namespace mvhmr::camera
