#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "mvhmr/eval/losses.hpp"
#include "mvhmr/net/network.hpp"

namespace mvhmr::train {

struct TrainConfig {
  std::string profile = "toy";
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double disc_lr = 1e-4;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  eval::LossWeights weights;
  bool adversarial = true;
  std::uint64_t seed = 0;
  net::ModelConfig model;
  // Per-batch view count is drawn uniformly from [min_views, max_train_views]
  // for the flexible variants; a and b always use model.train_views.
  std::size_t min_views = 1;
  std::size_t max_train_views = 4;
  // Write a checkpoint every this many epochs (0: only at the end).
  std::size_t checkpoint_every = 5;
  // Train on at most this many samples of the training split (0: all).
  std::size_t train_limit = 0;
  Dtype precision = Dtype::f32;
  std::string data_dir;
  std::string out_dir;

  // Desk-scale defaults.
  static TrainConfig toy();
  // Full-scale optimizer reference values: lr 1e-5, 100 epochs.
  static TrainConfig paper_scale();
  static TrainConfig named(const std::string& profile);

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  nlohmann::json to_json() const;
  // Starts from the profile named by "profile" (default toy); unknown keys
  // are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
};

TrainConfig load_config(const std::string& path);

}  // namespace mvhmr::train
