#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/eval/metrics.hpp"
#include "mvhmr/net/discriminator.hpp"
#include "mvhmr/train/adamw.hpp"
#include "mvhmr/train/batch.hpp"
#include "mvhmr/train/config.hpp"

namespace mvhmr::train {

// Non-finite loss or parameters; the last checkpoint on disk is left intact.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochStats {
  std::size_t epoch = 0;
  std::size_t batches = 0;
  double loss = 0;  // weighted generator objective
  double pose = 0;
  double shape = 0;
  double kp3d = 0;
  double kp2d = 0;
  double adv = 0;
  double disc = 0;
  std::size_t clamped_batches = 0;
  double seconds = 0;

  nlohmann::json to_json() const;
};

struct RunReport {
  std::vector<EpochStats> epochs;
  double seconds = 0;
  nlohmann::json to_json() const;
};

struct LossTerms {
  Tensor total;
  Tensor pose, shape, kp3d, kp2d, adv;
  bool clamped = false;
};

// Camera-frame joints [B, N, 24, 3] implied by a prediction.
Tensor predicted_camera_joints(const net::Prediction& pred, const body::DiffBodyModel& body);

// Weighted generator objective for one batch. `disc` may be null (no
// adversarial term).
LossTerms generator_loss(const net::Prediction& pred, const Batch& batch, const body::DiffBodyModel& body,
                         const net::Discriminator* disc, const eval::LossWeights& weights,
                         const camera::Intrinsics& K);

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const data::Dataset& ds);

  net::Network& model() { return *model_; }
  net::Discriminator& disc() { return *disc_; }
  const TrainConfig& config() const { return cfg_; }

  // Runs cfg.epochs epochs. Writes out_dir/checkpoint.bin every
  // checkpoint_every epochs and at the end when out_dir is set. Throws
  // NumericalError on a non-finite loss.
  RunReport train(const std::function<void(const EpochStats&)>& on_epoch = {});

 private:
  EpochStats run_epoch(std::size_t epoch);
  void save(std::size_t epoch) const;

  TrainConfig cfg_;
  const data::Dataset& ds_;
  body::DiffBodyModel body_;
  std::unique_ptr<net::Network> model_;
  std::unique_ptr<net::Discriminator> disc_;
  std::unique_ptr<AdamW> opt_g_, opt_d_;
  data::Rng rng_;
};

struct EvalOptions {
  std::size_t batch_size = 16;
  // Restrict to [begin, end) of the dataset; default is the eval split.
  std::optional<std::pair<std::size_t, std::size_t>> range;
  ImageHook hook;
};

// Predictions from the first `views` views of each sample, scored per
// (sample, view) in that view's camera frame, millimetres.
eval::MetricReport evaluate(const net::Network& model, const data::Dataset& ds, std::size_t views,
                            const EvalOptions& options = {});

}  // namespace mvhmr::train
