#pragma once

#include <Eigen/Geometry>
#include <unsupported/Eigen/MatrixFunctions>

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/camera/camera.hpp"

// Independent references shared by the unit and acceptance tests. None of
// them call into the library's geometry code.
namespace mvhmr::oracle {

using body::BodyModelParams;
using body::BodyState;
using body::kJoints;
using body::kShapeDims;
using body::MatX3;
using camera::CameraPose;
using camera::Intrinsics;
using camera::MatX2;

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d K;
  K << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return K;
}

// Rotation by the matrix exponential of the skew form.
inline Eigen::Matrix3d expm_rotation(const Eigen::Vector3d& w) { return skew(w).exp(); }

inline // Reference LBS written with 4x4 homogeneous chains and per-vertex loops.
MatX3 naive_lbs(const BodyModelParams& m, const BodyState& s) {
  const std::size_t V = m.vertex_count();
  MatX3 shaped = m.template_vertices;
  for (std::size_t k = 0; k < kShapeDims; ++k) shaped += s.beta(static_cast<Eigen::Index>(k)) * m.shape_basis[k];
  std::vector<Eigen::Vector3d> J(kJoints, Eigen::Vector3d::Zero());
  for (std::size_t j = 0; j < kJoints; ++j)
    for (std::size_t v = 0; v < V; ++v)
      J[j] += m.joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) *
              shaped.row(static_cast<Eigen::Index>(v)).transpose();

  std::vector<Eigen::Matrix4d> world(kJoints);
  for (std::size_t j = 0; j < kJoints; ++j) {
    const Eigen::Vector3d aa = j == 0 ? s.theta_g : Eigen::Vector3d(s.theta_b.row(static_cast<Eigen::Index>(j - 1)));
    Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
    local.topLeftCorner<3, 3>() = aa.norm() > 0 ? Eigen::AngleAxisd(aa.norm(), aa.normalized()).toRotationMatrix()
                                                : Eigen::Matrix3d::Identity();
    const int p = m.parents[j];
    local.topRightCorner<3, 1>() = p < 0 ? J[j] : Eigen::Vector3d(J[j] - J[static_cast<std::size_t>(p)]);
    world[j] = p < 0 ? local : Eigen::Matrix4d(world[static_cast<std::size_t>(p)] * local);
  }
  MatX3 out(V, 3);
  for (std::size_t v = 0; v < V; ++v) {
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    for (std::size_t j = 0; j < kJoints; ++j) {
      Eigen::Vector4d rest;
      rest << shaped.row(static_cast<Eigen::Index>(v)).transpose() - J[j], 1.0;
      acc += m.skinning_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) * (world[j] * rest);
    }
    out.row(static_cast<Eigen::Index>(v)) = acc.head<3>().transpose();
  }
  return out;
}

inline // [K | 0] * [R t; 0 1] applied to homogeneous points, then dehomogenized.
MatX2 homogeneous_projection(const MatX3& pts, const CameraPose& pose, const Intrinsics& K) {
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity();
  const Eigen::Vector3d aa = pose.R;
  E.topLeftCorner<3, 3>() =
      aa.norm() > 0 ? Eigen::AngleAxisd(aa.norm(), aa.normalized()).toRotationMatrix() : Eigen::Matrix3d::Identity();
  E.topRightCorner<3, 1>() = pose.t;
  Eigen::Matrix<double, 3, 4> P = Eigen::Matrix<double, 3, 4>::Zero();
  P(0, 0) = K.focal;
  P(1, 1) = K.focal;
  P(0, 2) = K.cx;
  P(1, 2) = K.cy;
  P(2, 2) = 1;
  MatX2 out(pts.rows(), 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Eigen::Vector3d h = P * E * pts.row(i).transpose().homogeneous();
    out.row(i) = h.hnormalized().transpose();
  }
  return out;
}

}  // namespace mvhmr::oracle
