#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvhmr/net/layers.hpp"

namespace mvhmr::net {

// a: pooled concat MLP; b: camera query tokens; c: CPE + score-weighted
// pooling; d: CPE + AVF.
enum class Variant { a, b, c, d };

char variant_char(Variant v);
Variant parse_variant(std::string_view s);

// Raised when a variant cannot accept the number of views it was given.
class ViewCountError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  Variant variant = Variant::d;
  std::size_t image_size = 64;
  std::size_t in_channels = 3;
  std::size_t channels = 128;
  std::vector<std::size_t> stage_widths{32, 64, 128, 320};
  // Extra stride-1 3x3 convolutions after each stride-2 stage.
  std::vector<std::size_t> stage_extra{0, 1, 1, 3};
  std::size_t depth = 2;
  std::size_t heads = 4;
  std::size_t mlp_ratio = 2;
  std::size_t head_hidden = 256;
  std::size_t score_hidden = 64;
  std::size_t max_views = 8;
  // Fixed view count of variants a and b.
  std::size_t train_views = 4;
  // Initial camera translation bias (metres along the optical axis).
  double init_depth = 3.0;
  std::uint64_t seed = 0;

  std::size_t token_side() const;
  std::size_t tokens_per_view() const { return token_side() * token_side(); }
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

inline constexpr std::size_t kBodyOutputs = 23 * 6 + 10;
inline constexpr std::size_t kCameraOutputs = 9;

struct Prediction {
  Tensor cam_rotation;   // [B, N, 3, 3]
  Tensor cam_translation;  // [B, N, 3]
  Tensor body_rotation;  // [B, 23, 3, 3]
  Tensor beta;           // [B, 10]
};

// Shared per-view convolutional encoder producing a token grid.
struct Encoder {
  std::vector<Conv2d> convs;
  Conv2d proj;
  std::size_t image_size = 0;

  Encoder() = default;
  Encoder(const ModelConfig& cfg, Init& init, Dtype dtype);
  // images: [M, H, W, Cin] -> tokens [M, T, C]
  Tensor operator()(const Tensor& images) const;
  void collect(const std::string& prefix, ParamList& out);
  std::size_t macs_per_view() const;
};

// Fixed 2D sinusoidal table [T, C]; rows follow the token raster order.
Tensor sinusoidal_table(std::size_t side, std::size_t channels, Dtype dtype);

class Network {
 public:
  explicit Network(const ModelConfig& cfg, Dtype dtype = Dtype::f32);
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const ModelConfig& config() const { return cfg_; }
  Dtype dtype() const { return dtype_; }

  // images: [B, N, H, W, Cin]. `slots` assigns each view a learned embedding
  // slot; empty means slot(i) = i.
  Prediction forward(const Tensor& images, std::span<const std::int64_t> slots = {}) const;

  // images [N, H, W, Cin] -> tokens [N, T, C]
  Tensor encode(const Tensor& images) const;
  // tokens [B, N, T, C] -> (rotation [B, N, 3, 3], translation [B, N, 3])
  std::pair<Tensor, Tensor> cpe(const Tensor& tokens) const;
  // tokens [B, N, T, C] -> (body rotations [B, 23, 3, 3], beta [B, 10])
  std::pair<Tensor, Tensor> avf(const Tensor& tokens, std::span<const std::int64_t> slots = {}) const;
  // Full head (everything after the encoder) for the configured variant.
  Prediction head(const Tensor& tokens, std::span<const std::int64_t> slots = {}) const;

  // Multi-view position embeddings [N, T, C].
  Tensor position_embeddings(std::span<const std::int64_t> slots) const;

  ParamList parameters();
  ParamList backbone_parameters();
  ParamList head_parameters();
  void cast(Dtype dtype);

  // Zeroes every decoder weight and bias (test hook).
  void zero_decoder();

  Encoder encoder;
  Tensor spatial;        // [T, C], fixed
  Tensor view_slots;     // [max_views, C]
  Tensor query;          // [C]
  std::vector<DecoderLayer> decoder;
  Mlp f_b;
  Mlp f_c;
  // Variant a.
  Mlp joint_mlp;
  // Variant b.
  Tensor camera_queries;  // [train_views, C]
  // Variant c.
  Mlp score_mlp;

 private:
  std::vector<std::int64_t> resolve_slots(std::size_t n, std::span<const std::int64_t> slots) const;
  std::pair<Tensor, Tensor> decode_body(const Tensor& raw) const;
  std::pair<Tensor, Tensor> decode_camera(const Tensor& raw) const;
  Tensor decoder_forward(const Tensor& queries, const Tensor& memory) const;
  Tensor memory_tokens(const Tensor& tokens, std::span<const std::int64_t> slots) const;

  ModelConfig cfg_;
  Dtype dtype_;
};

}  // namespace mvhmr::net
