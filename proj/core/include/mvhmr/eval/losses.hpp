#pragma once

#include <utility>

#include <nlohmann/json.hpp>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr::eval {

struct LossWeights {
  double pose = 1.0;
  double shape = 0.5;
  double kp3d = 5.0;
  double kp2d = 5.0;
  double adv = 0.1;

  // Throws std::invalid_argument unless every weight is finite and >= 0.
  void validate() const;
  nlohmann::json to_json() const;
  static LossWeights from_json(const nlohmann::json& j);
};

// Batched losses average over the leading batch axis; each per-sample value
// is the plain sum over its terms.

// pred_rotation: [B, 23, 3, 3]; pred_beta: [B, 10]; gt_theta: [B, 23, 3]
// axis-angle; gt_beta: [B, 10]. Squared Frobenius distance to rodrigues(gt)
// summed over joints, plus ||beta - gt_beta||^2.
Tensor smpl_loss(const Tensor& pred_rotation, const Tensor& pred_beta, const Tensor& gt_theta,
                 const Tensor& gt_beta);

// The two summands of smpl_loss, for separate weighting.
struct SmplLossTerms {
  Tensor pose;
  Tensor shape;
};
SmplLossTerms smpl_loss_terms(const Tensor& pred_rotation, const Tensor& pred_beta, const Tensor& gt_theta,
                              const Tensor& gt_beta);

// [B, N, k, 3] camera-frame joints; L1 summed over views, joints and coords.
Tensor keypoint3d_loss(const Tensor& pred, const Tensor& gt);

// [B, N, k, 2] normalized image coordinates; L1 as above.
Tensor keypoint2d_loss(const Tensor& pred, const Tensor& gt);

struct AdversarialLosses {
  Tensor gen;   // sum_k (D_k(fake) - 1)^2
  Tensor disc;  // sum_k (D_k(real) - 1)^2 + D_k(fake)^2
};

// scores: [B, 25]. The caller detaches `fake` before using `disc` for the
// discriminator step.
AdversarialLosses adversarial_losses(const Tensor& scores_fake, const Tensor& scores_real);

}  // namespace mvhmr::eval
