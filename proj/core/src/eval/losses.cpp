#include "mvhmr/eval/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::eval {

namespace {

void require(bool ok, const std::string& what, const Shape& a, const Shape& b) {
  if (!ok) throw ShapeError(what + ": got " + shape_str(a) + " and " + shape_str(b));
}

Tensor per_sample_mean(const Tensor& per_sample) { return ops::mean(per_sample, 0); }

Tensor l1_keypoints(const char* name, const Tensor& pred, const Tensor& gt, std::size_t coords) {
  require(pred.dim() == 4 && gt.dim() == 4 && pred.size(3) == coords && gt.size(3) == coords,
          std::string(name) + ": expected [B, N, k, " + std::to_string(coords) + "]", pred.shape(), gt.shape());
  require(pred.size(1) == gt.size(1), std::string(name) + ": view-count mismatch", pred.shape(), gt.shape());
  require(pred.shape() == gt.shape(), std::string(name) + ": shape mismatch", pred.shape(), gt.shape());
  const auto B = static_cast<std::int64_t>(pred.size(0));
  return per_sample_mean(ops::sum(ops::reshape(ops::abs(pred - gt), {B, -1}), 1));
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {pose, shape, kp3d, kp2d, adv}) {
    if (!std::isfinite(w) || w < 0) throw std::invalid_argument("loss weights must be finite and nonnegative");
  }
}

nlohmann::json LossWeights::to_json() const {
  return {{"pose", pose}, {"shape", shape}, {"kp3d", kp3d}, {"kp2d", kp2d}, {"adv", adv}};
}

LossWeights LossWeights::from_json(const nlohmann::json& j) {
  LossWeights w;
  for (const auto& [key, value] : j.items()) {
    if (key == "pose") w.pose = value.get<double>();
    else if (key == "shape") w.shape = value.get<double>();
    else if (key == "kp3d") w.kp3d = value.get<double>();
    else if (key == "kp2d") w.kp2d = value.get<double>();
    else if (key == "adv") w.adv = value.get<double>();
    else throw std::invalid_argument("unknown loss weight '" + key + "'");
  }
  w.validate();
  return w;
}

SmplLossTerms smpl_loss_terms(const Tensor& pred_rotation, const Tensor& pred_beta, const Tensor& gt_theta,
                              const Tensor& gt_beta) {
  require(pred_rotation.dim() == 4 && pred_rotation.size(1) == 23 && pred_rotation.size(2) == 3 &&
              pred_rotation.size(3) == 3 && gt_theta.dim() == 3 && gt_theta.size(1) == 23 &&
              gt_theta.size(2) == 3 && gt_theta.size(0) == pred_rotation.size(0),
          "smpl_loss: expected rotations [B, 23, 3, 3] and axis-angle [B, 23, 3]", pred_rotation.shape(),
          gt_theta.shape());
  require(pred_beta.shape() == gt_beta.shape() && pred_beta.dim() == 2 && pred_beta.size(1) == 10 &&
              pred_beta.size(0) == pred_rotation.size(0),
          "smpl_loss: expected beta [B, 10]", pred_beta.shape(), gt_beta.shape());
  const auto B = static_cast<std::int64_t>(pred_rotation.size(0));
  const Tensor gt_rot = ops::reshape(ops::rodrigues(ops::reshape(gt_theta, {-1, 3})), {B, 23, 3, 3});
  const Tensor pose = ops::sum(ops::reshape(ops::square(pred_rotation - gt_rot), {B, -1}), 1);
  const Tensor shape = ops::sum(ops::square(pred_beta - gt_beta), 1);
  return {per_sample_mean(pose), per_sample_mean(shape)};
}

Tensor smpl_loss(const Tensor& pred_rotation, const Tensor& pred_beta, const Tensor& gt_theta,
                 const Tensor& gt_beta) {
  const auto terms = smpl_loss_terms(pred_rotation, pred_beta, gt_theta, gt_beta);
  return terms.pose + terms.shape;
}

Tensor keypoint3d_loss(const Tensor& pred, const Tensor& gt) { return l1_keypoints("keypoint3d_loss", pred, gt, 3); }

Tensor keypoint2d_loss(const Tensor& pred, const Tensor& gt) { return l1_keypoints("keypoint2d_loss", pred, gt, 2); }

AdversarialLosses adversarial_losses(const Tensor& scores_fake, const Tensor& scores_real) {
  require(scores_fake.dim() == 2 && scores_fake.shape() == scores_real.shape(),
          "adversarial_losses: expected matching [B, 25] scores", scores_fake.shape(), scores_real.shape());
  AdversarialLosses out;
  out.gen = per_sample_mean(ops::sum(ops::square(scores_fake + (-1.0)), 1));
  out.disc = per_sample_mean(ops::sum(ops::square(scores_real + (-1.0)) + ops::square(scores_fake), 1));
  return out;
}

}  // namespace mvhmr::eval
