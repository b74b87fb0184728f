#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvhmr/data/render.hpp"
#include "mvhmr/data/synth.hpp"

namespace mvhmr::data {

inline constexpr int kDatasetVersion = 1;

using Joints2 = Eigen::Matrix<double, body::kJoints, 2, Eigen::RowMajor>;

struct ViewRecord {
  camera::CameraPose camera;
  Image image;
  body::Joints j3d_cam;  // metres, camera frame
  Joints2 j2d;           // pixels
};

// All floating fields hold float32-representable values, so a sample survives
// the binary round trip exactly.
struct MultiViewSample {
  body::Shape10 beta = body::Shape10::Zero();
  body::BodyPose theta_b = body::BodyPose::Zero();
  std::vector<ViewRecord> views;
};

struct SynthConfig {
  std::size_t sample_count = 2000;
  // The last `eval_count` indices form the evaluation split.
  std::size_t eval_count = 200;
  std::size_t views = 4;
  std::size_t image_size = 64;
  std::size_t channels = 3;
  double focal = 100.0;
  std::uint64_t body_seed = 7;
  std::size_t vertex_count = 432;
  CameraRig rig;

  camera::Intrinsics intrinsics() const;
  void validate() const;
  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

// Deterministic in (config, body model, seed, index).
MultiViewSample generate_sample(const SynthConfig& cfg, const body::BodyModelParams& model, std::uint64_t seed,
                                std::size_t index);

// Bytes of one record; see manifest "layout".
std::size_t record_bytes(std::size_t views, std::size_t height, std::size_t width, std::size_t channels);

// Writes `manifest.json` and `samples.bin` into `dir` (created if needed).
// Throws std::runtime_error with the path on I/O failure.
void generate_dataset(const SynthConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

// Whole dataset held in memory; samples are decoded on demand.
class Dataset {
 public:
  explicit Dataset(const std::filesystem::path& dir);

  const nlohmann::json& manifest() const { return manifest_; }
  const SynthConfig& config() const { return cfg_; }
  const body::BodyModelParams& body_model() const { return model_; }
  std::size_t size() const { return count_; }
  std::size_t views() const { return cfg_.views; }
  std::pair<std::size_t, std::size_t> train_range() const { return {0, count_ - cfg_.eval_count}; }
  std::pair<std::size_t, std::size_t> eval_range() const { return {count_ - cfg_.eval_count, count_}; }

  MultiViewSample sample(std::size_t index) const;

 private:
  nlohmann::json manifest_;
  SynthConfig cfg_;
  body::BodyModelParams model_;
  std::size_t count_ = 0;
  std::size_t record_ = 0;
  std::vector<std::uint8_t> bytes_;
};

void encode_sample(const MultiViewSample& s, std::vector<std::uint8_t>& out);
MultiViewSample decode_sample(const std::uint8_t* record, std::size_t views, std::size_t height, std::size_t width,
                              std::size_t channels);

}  // namespace mvhmr::data
