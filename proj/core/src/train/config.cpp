#include "mvhmr/train/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mvhmr::train {

TrainConfig TrainConfig::toy() { return TrainConfig{}; }

TrainConfig TrainConfig::paper_scale() {
  TrainConfig c;
  c.profile = "paper-scale";
  c.lr = 1e-5;
  c.epochs = 100;
  return c;
}

TrainConfig TrainConfig::named(const std::string& profile) {
  if (profile == "toy") return toy();
  if (profile == "paper-scale") return paper_scale();
  throw std::invalid_argument("unknown config profile '" + profile + "' (expected toy or paper-scale)");
}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!std::isfinite(v) || v <= 0) throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
  };
  positive(lr, "lr");
  positive(disc_lr, "disc_lr");
  if (!(beta1 >= 0 && beta1 < 1)) throw std::invalid_argument("config: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("config: beta2 must lie in [0, 1)");
  if (!std::isfinite(weight_decay) || weight_decay < 0) throw std::invalid_argument("config: weight_decay must be >= 0");
  if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (min_views < 1 || min_views > max_train_views) {
    throw std::invalid_argument("config: need 1 <= min_views <= max_train_views");
  }
  if (max_train_views > model.max_views) throw std::invalid_argument("config: max_train_views exceeds model.max_views");
  weights.validate();
  model.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"profile", profile},
          {"lr", lr},
          {"beta1", beta1},
          {"beta2", beta2},
          {"weight_decay", weight_decay},
          {"disc_lr", disc_lr},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"weights", weights.to_json()},
          {"adversarial", adversarial},
          {"seed", seed},
          {"model", model.to_json()},
          {"min_views", min_views},
          {"max_train_views", max_train_views},
          {"checkpoint_every", checkpoint_every},
          {"train_limit", train_limit},
          {"precision", std::string(dtype_name(precision))},
          {"data_dir", data_dir},
          {"out_dir", out_dir}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  TrainConfig c = named(j.value("profile", std::string("toy")));
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "profile") continue;
      if (key == "lr") c.lr = value.get<double>();
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else if (key == "disc_lr") c.disc_lr = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "weights") c.weights = eval::LossWeights::from_json(value);
      else if (key == "adversarial") c.adversarial = value.get<bool>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "model") c.model = net::ModelConfig::from_json(value);
      else if (key == "min_views") c.min_views = value.get<std::size_t>();
      else if (key == "max_train_views") c.max_train_views = value.get<std::size_t>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<std::size_t>();
      else if (key == "train_limit") c.train_limit = value.get<std::size_t>();
      else if (key == "precision") c.precision = parse_dtype(value.get<std::string>());
      else if (key == "data_dir") c.data_dir = value.get<std::string>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return TrainConfig::from_json(j);
}

}  // namespace mvhmr::train
