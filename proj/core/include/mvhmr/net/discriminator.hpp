#pragma once

#include "mvhmr/net/layers.hpp"

namespace mvhmr::net {

inline constexpr std::size_t kDiscriminatorScores = 25;

// Factorized pose/shape prior: 23 per-joint scores (shared first layer),
// one shape score and one score over all joints, in that order. Raw LSGAN
// outputs, no sigmoid.
struct Discriminator {
  Linear joint_in;       // 9 -> 32, shared across joints
  Tensor joint_out_w;    // [23, 32]
  Tensor joint_out_b;    // [23]
  Mlp shape;             // 10 -> 64 -> 1
  Mlp all;               // 207 -> 64 -> 1

  explicit Discriminator(std::uint64_t seed, Dtype dtype = Dtype::f32);

  // body_rotation: [B, 23, 3, 3]; beta: [B, 10] -> [B, 25]
  Tensor operator()(const Tensor& body_rotation, const Tensor& beta) const;
  ParamList parameters();
  void cast(Dtype dtype) { cast_params(parameters(), dtype); }
};

}  // namespace mvhmr::net
