#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr::body {

inline constexpr std::size_t kJoints = 24;
inline constexpr std::size_t kBodyJoints = 23;
inline constexpr std::size_t kShapeDims = 10;
inline constexpr std::size_t kMinVertexCount = kJoints * 6;

using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Joints = Eigen::Matrix<double, kJoints, 3, Eigen::RowMajor>;
using BodyPose = Eigen::Matrix<double, kBodyJoints, 3, Eigen::RowMajor>;
using Shape10 = Eigen::Matrix<double, kShapeDims, 1>;

// SMPL joint topology; root has parent -1 and every parent precedes its child.
const std::array<int, kJoints>& smpl_parents();
const std::array<std::string_view, kJoints>& joint_names();

struct BodyModelParams {
  std::uint64_t seed = 0;
  MatX3 template_vertices;               // V x 3, metres
  std::array<MatX3, kShapeDims> shape_basis;
  Eigen::MatrixXd skinning_weights;      // V x 24, rows sum to 1
  Eigen::MatrixXd joint_regressor;       // 24 x V, rows sum to 1
  std::array<int, kJoints> parents{};
  Joints rest_joints;                    // joint_regressor * template_vertices
  std::vector<int> vertex_bone;          // owning bone (= joint index) per vertex

  std::size_t vertex_count() const { return static_cast<std::size_t>(template_vertices.rows()); }
};

// Capsule-like procedural template: rings of vertices around one bone per
// joint. Throws std::invalid_argument when vertex_count < kMinVertexCount.
BodyModelParams build_template(std::uint64_t seed, std::size_t vertex_count = 432);

struct BodyState {
  Eigen::Vector3d theta_g = Eigen::Vector3d::Zero();
  BodyPose theta_b = BodyPose::Zero();
  Shape10 beta = Shape10::Zero();
};

struct BodyOutput {
  MatX3 vertices;
  Joints joints;
};

// Shaped template: template + sum_k beta_k * shape_basis_k.
MatX3 shaped_vertices(const BodyModelParams& model, const Shape10& beta);

// Linear blend skinning of the shaped template. `rotations[j]` is joint j's
// local rotation; rotations[0] is the global orientation.
BodyOutput forward(const BodyModelParams& model, const std::array<Eigen::Matrix3d, kJoints>& rotations,
                   const Shape10& beta);
BodyOutput forward(const BodyModelParams& model, const BodyState& state);

// Differentiable batched forward on tensors of either dtype.
class DiffBodyModel {
 public:
  explicit DiffBodyModel(const BodyModelParams& model);

  struct Output {
    Tensor vertices;  // [B, V, 3]
    Tensor joints;    // [B, 24, 3]
  };

  // rotations: [B, 24, 3, 3]; beta: [B, 10].
  Output forward(const Tensor& rotations, const Tensor& beta) const;

  // rotations for the 23 body joints [B, 23, 3, 3]; the root is identity.
  Output forward_canonical(const Tensor& body_rotations, const Tensor& beta) const;

  const BodyModelParams& params() const { return model_; }

 private:
  struct Constants {
    Tensor template_flat;    // [V*3]
    Tensor basis;            // [10, V*3]
    Tensor joint_template;   // [72]
    Tensor joint_basis;      // [10, 72]
    Tensor weights_t;        // [24, V]
    Tensor regressor_t;      // [V, 24]
  };
  const Constants& constants(Dtype dtype) const;

  BodyModelParams model_;
  Constants f32_, f64_;
};

}  // namespace mvhmr::body
