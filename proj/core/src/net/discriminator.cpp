#include "mvhmr/net/discriminator.hpp"

#include <cmath>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::net {

Discriminator::Discriminator(std::uint64_t seed, Dtype dtype) {
  Init init(seed);
  joint_in = Linear(9, 32, init, dtype);
  joint_out_w = init.normal({23, 32}, 1.0 / std::sqrt(32.0), dtype);
  joint_out_b = init.zeros({23}, dtype);
  shape = Mlp({10, 64, 1}, init, dtype);
  all = Mlp({23 * 9, 64, 1}, init, dtype);
}

Tensor Discriminator::operator()(const Tensor& body_rotation, const Tensor& beta) const {
  if (body_rotation.dim() != 4 || body_rotation.size(1) != 23 || beta.dim() != 2 || beta.size(1) != 10 ||
      beta.size(0) != body_rotation.size(0)) {
    throw ShapeError("discriminate: expected [B, 23, 3, 3] and [B, 10], got " +
                     shape_str(body_rotation.shape()) + " and " + shape_str(beta.shape()));
  }
  const auto B = static_cast<std::int64_t>(beta.size(0));
  const Tensor joints = ops::reshape(body_rotation, {B, 23, 9});
  const Tensor h = ops::gelu(joint_in(joints));                          // [B, 23, 32]
  const Tensor per_joint = ops::sum(h * joint_out_w, 2) + joint_out_b;    // [B, 23]
  const Tensor s = shape(beta);                                            // [B, 1]
  const Tensor a = all(ops::reshape(body_rotation, {B, 23 * 9}));          // [B, 1]
  return ops::concat({per_joint, s, a}, 1);
}

ParamList Discriminator::parameters() {
  ParamList out;
  joint_in.collect("disc.joint_in", out);
  out.push_back({"disc.joint_out.weight", &joint_out_w});
  out.push_back({"disc.joint_out.bias", &joint_out_b});
  shape.collect("disc.shape", out);
  all.collect("disc.all", out);
  return out;
}

}  // namespace mvhmr::net
