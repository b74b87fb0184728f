#include "mvhmr/net/network.hpp"

#include <cmath>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::net {

using ops::reshape;
using ops::slice;

char variant_char(Variant v) {
  switch (v) {
    case Variant::a:
      return 'a';
    case Variant::b:
      return 'b';
    case Variant::c:
      return 'c';
    case Variant::d:
      break;
  }
  return 'd';
}

Variant parse_variant(std::string_view s) {
  if (s == "a") return Variant::a;
  if (s == "b") return Variant::b;
  if (s == "c") return Variant::c;
  if (s == "d") return Variant::d;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (expected a, b, c or d)");
}

std::size_t ModelConfig::token_side() const { return image_size >> stage_widths.size(); }

void ModelConfig::validate() const {
  if (stage_widths.empty() || stage_widths.size() != stage_extra.size()) {
    throw std::invalid_argument("model: stage_widths and stage_extra must be non-empty and of equal length");
  }
  if (image_size == 0 || (image_size % (std::size_t{1} << stage_widths.size())) != 0) {
    throw std::invalid_argument("model: image_size " + std::to_string(image_size) +
                                " is not divisible by 2^stages");
  }
  if (in_channels == 0 || channels == 0 || heads == 0 || channels % heads != 0) {
    throw std::invalid_argument("model: channels must be positive and divisible by heads");
  }
  if (max_views == 0 || train_views == 0 || train_views > max_views) {
    throw std::invalid_argument("model: need 1 <= train_views <= max_views");
  }
  if (depth == 0 || mlp_ratio == 0 || head_hidden == 0 || score_hidden == 0) {
    throw std::invalid_argument("model: depth, mlp_ratio and hidden widths must be positive");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"variant", std::string(1, variant_char(variant))},
          {"image_size", image_size},
          {"in_channels", in_channels},
          {"channels", channels},
          {"stage_widths", stage_widths},
          {"stage_extra", stage_extra},
          {"depth", depth},
          {"heads", heads},
          {"mlp_ratio", mlp_ratio},
          {"head_hidden", head_hidden},
          {"score_hidden", score_hidden},
          {"max_views", max_views},
          {"train_views", train_views},
          {"init_depth", init_depth},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "variant") {
      c.variant = parse_variant(value.get<std::string>());
    } else if (key == "image_size") {
      c.image_size = value.get<std::size_t>();
    } else if (key == "in_channels") {
      c.in_channels = value.get<std::size_t>();
    } else if (key == "channels") {
      c.channels = value.get<std::size_t>();
    } else if (key == "stage_widths") {
      c.stage_widths = value.get<std::vector<std::size_t>>();
    } else if (key == "stage_extra") {
      c.stage_extra = value.get<std::vector<std::size_t>>();
    } else if (key == "depth") {
      c.depth = value.get<std::size_t>();
    } else if (key == "heads") {
      c.heads = value.get<std::size_t>();
    } else if (key == "mlp_ratio") {
      c.mlp_ratio = value.get<std::size_t>();
    } else if (key == "head_hidden") {
      c.head_hidden = value.get<std::size_t>();
    } else if (key == "score_hidden") {
      c.score_hidden = value.get<std::size_t>();
    } else if (key == "max_views") {
      c.max_views = value.get<std::size_t>();
    } else if (key == "train_views") {
      c.train_views = value.get<std::size_t>();
    } else if (key == "init_depth") {
      c.init_depth = value.get<double>();
    } else if (key == "seed") {
      c.seed = value.get<std::uint64_t>();
    } else {
      throw std::invalid_argument("model config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

Encoder::Encoder(const ModelConfig& cfg, Init& init, Dtype dtype) : image_size(cfg.image_size) {
  std::size_t in = cfg.in_channels;
  for (std::size_t s = 0; s < cfg.stage_widths.size(); ++s) {
    const std::size_t w = cfg.stage_widths[s];
    convs.emplace_back(in, w, 3, 2, 1, init, dtype);
    for (std::size_t e = 0; e < cfg.stage_extra[s]; ++e) convs.emplace_back(w, w, 3, 1, 1, init, dtype);
    in = w;
  }
  proj = Conv2d(in, cfg.channels, 1, 1, 0, init, dtype);
}

Tensor Encoder::operator()(const Tensor& images) const {
  if (images.dim() != 4 || images.size(1) != image_size || images.size(2) != image_size ||
      images.size(3) != convs.front().in_channels()) {
    throw ShapeError("encode: expected images [N, " + std::to_string(image_size) + ", " +
                     std::to_string(image_size) + ", " + std::to_string(convs.front().in_channels()) +
                     "], got " + shape_str(images.shape()));
  }
  Tensor h = images;
  for (const auto& conv : convs) h = ops::gelu(conv(h));
  h = proj(h);
  const auto M = static_cast<std::int64_t>(h.size(0));
  const auto T = static_cast<std::int64_t>(h.size(1) * h.size(2));
  const auto C = static_cast<std::int64_t>(h.size(3));
  // Tokens stay unnormalized; empty image regions map to near-zero tokens.
  return reshape(h, {M, T, C});
}

void Encoder::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < convs.size(); ++i) convs[i].collect(prefix + ".conv" + std::to_string(i), out);
  proj.collect(prefix + ".proj", out);
}

std::size_t Encoder::macs_per_view() const {
  std::size_t side = image_size;
  std::size_t n = 0;
  for (const auto& conv : convs) {
    side = (side + 2 * conv.padding - conv.kernel()) / conv.stride + 1;
    n += side * side * conv.kernel() * conv.kernel() * conv.in_channels() * conv.out_channels();
  }
  n += side * side * proj.in_channels() * proj.out_channels();
  return n;
}

Tensor sinusoidal_table(std::size_t side, std::size_t channels, Dtype dtype) {
  // First half encodes the row, second half the column; sin/cos pairs.
  const std::size_t half = channels / 2;
  const std::size_t freqs = half / 2;
  std::vector<double> table(side * side * channels, 0.0);
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      double* row = table.data() + (y * side + x) * channels;
      for (std::size_t f = 0; f < freqs; ++f) {
        const double omega = 1.0 / std::pow(100.0, static_cast<double>(f) / static_cast<double>(freqs));
        row[2 * f] = std::sin(static_cast<double>(y) * omega);
        row[2 * f + 1] = std::cos(static_cast<double>(y) * omega);
        row[half + 2 * f] = std::sin(static_cast<double>(x) * omega);
        row[half + 2 * f + 1] = std::cos(static_cast<double>(x) * omega);
      }
    }
  }
  return Tensor::from_vector({side * side, channels}, table, dtype);
}

namespace {

// Zero final layer with a fixed bias so training starts from a sane output.
void set_output_bias(Mlp& mlp, const std::vector<double>& bias) {
  Linear& last = mlp.layers.back();
  for (std::size_t i = 0; i < last.weight.numel(); ++i) last.weight.set_value(i, 0.0);
  for (std::size_t i = 0; i < bias.size(); ++i) last.bias.set_value(i, bias[i]);
}

std::vector<double> body_bias() {
  std::vector<double> b;
  for (int j = 0; j < 23; ++j) b.insert(b.end(), {1, 0, 0, 0, 1, 0});
  b.resize(kBodyOutputs, 0.0);
  return b;
}

// Camera facing the subject's front: R = diag(1, -1, -1), depth init_depth.
std::vector<double> camera_bias(double depth) { return {1, 0, 0, 0, -1, 0, 0, 0, depth}; }

}  // namespace

Network::Network(const ModelConfig& cfg, Dtype dtype) : cfg_(cfg), dtype_(dtype) {
  cfg_.validate();
  Init init(cfg.seed);
  const std::size_t C = cfg.channels;
  const std::size_t H = cfg.head_hidden;
  encoder = Encoder(cfg, init, dtype);
  spatial = sinusoidal_table(cfg.token_side(), C, dtype);
  const bool uses_decoder = cfg.variant == Variant::b || cfg.variant == Variant::d;
  if (uses_decoder) {
    view_slots = init.normal({cfg.max_views, C}, 0.02, dtype);
    query = init.normal({C}, 0.02, dtype);
    for (std::size_t l = 0; l < cfg.depth; ++l) decoder.emplace_back(C, cfg.heads, cfg.mlp_ratio, init, dtype);
  }
  if (cfg.variant == Variant::b) camera_queries = init.normal({cfg.train_views, C}, 0.02, dtype);
  if (cfg.variant == Variant::a) {
    joint_mlp = Mlp({cfg.train_views * C, H, H, kBodyOutputs + kCameraOutputs * cfg.train_views}, init, dtype);
    std::vector<double> bias = body_bias();
    for (std::size_t v = 0; v < cfg.train_views; ++v) {
      const auto cb = camera_bias(cfg.init_depth);
      bias.insert(bias.end(), cb.begin(), cb.end());
    }
    set_output_bias(joint_mlp, bias);
  } else {
    f_b = Mlp({C, H, H, kBodyOutputs}, init, dtype);
    f_c = Mlp({C, H, H, kCameraOutputs}, init, dtype);
    set_output_bias(f_b, body_bias());
    set_output_bias(f_c, camera_bias(cfg.init_depth));
  }
  if (cfg.variant == Variant::c) score_mlp = Mlp({C, cfg.score_hidden, 1}, init, dtype);
}

ParamList Network::backbone_parameters() {
  ParamList out;
  encoder.collect("encoder", out);
  return out;
}

ParamList Network::head_parameters() {
  ParamList out;
  if (view_slots.defined()) out.push_back({"view_slots", &view_slots});
  if (query.defined()) out.push_back({"query", &query});
  if (camera_queries.defined()) out.push_back({"camera_queries", &camera_queries});
  for (std::size_t l = 0; l < decoder.size(); ++l) decoder[l].collect("decoder." + std::to_string(l), out);
  if (!f_b.layers.empty()) f_b.collect("f_b", out);
  if (!f_c.layers.empty()) f_c.collect("f_c", out);
  if (!joint_mlp.layers.empty()) joint_mlp.collect("joint_mlp", out);
  if (!score_mlp.layers.empty()) score_mlp.collect("score_mlp", out);
  return out;
}

ParamList Network::parameters() {
  ParamList out = backbone_parameters();
  const ParamList head = head_parameters();
  out.insert(out.end(), head.begin(), head.end());
  return out;
}

void Network::cast(Dtype dtype) {
  cast_params(parameters(), dtype);
  spatial = spatial.to(dtype);
  dtype_ = dtype;
}

void Network::zero_decoder() {
  ParamList ps;
  for (std::size_t l = 0; l < decoder.size(); ++l) decoder[l].collect("decoder", ps);
  for (const auto& p : ps) {
    for (std::size_t i = 0; i < p.tensor->numel(); ++i) p.tensor->set_value(i, 0.0);
  }
}

Tensor Network::encode(const Tensor& images) const { return encoder(images); }

std::vector<std::int64_t> Network::resolve_slots(std::size_t n, std::span<const std::int64_t> slots) const {
  if (n == 0) throw ViewCountError("at least one view is required");
  if (n > cfg_.max_views) {
    throw ViewCountError(std::to_string(n) + " views exceed the configured cap of max_views = " +
                         std::to_string(cfg_.max_views));
  }
  std::vector<std::int64_t> out(n);
  if (slots.empty()) {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::int64_t>(i);
    return out;
  }
  if (slots.size() != n) {
    throw std::invalid_argument("slots: " + std::to_string(slots.size()) + " slots for " + std::to_string(n) +
                                " views");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i] < 0 || static_cast<std::size_t>(slots[i]) >= cfg_.max_views) {
      throw std::invalid_argument("slots: slot " + std::to_string(slots[i]) + " outside [0, max_views)");
    }
    out[i] = slots[i];
  }
  return out;
}

Tensor Network::position_embeddings(std::span<const std::int64_t> slots) const {
  const auto N = static_cast<std::int64_t>(slots.size());
  const auto T = static_cast<std::int64_t>(spatial.size(0));
  const auto C = static_cast<std::int64_t>(spatial.size(1));
  const Tensor views = reshape(ops::embedding(view_slots, slots), {N, 1, C});
  std::vector<Tensor> copies(static_cast<std::size_t>(N), reshape(spatial, {1, T, C}));
  return ops::concat(copies, 0) + views;
}

Tensor Network::memory_tokens(const Tensor& tokens, std::span<const std::int64_t> slots) const {
  const auto B = static_cast<std::int64_t>(tokens.size(0));
  const auto N = static_cast<std::int64_t>(tokens.size(1));
  const auto T = static_cast<std::int64_t>(tokens.size(2));
  const auto C = static_cast<std::int64_t>(tokens.size(3));
  return reshape(tokens + position_embeddings(slots), {B, N * T, C});
}

Tensor Network::decoder_forward(const Tensor& queries, const Tensor& memory) const {
  Tensor x = queries;
  for (const auto& layer : decoder) x = layer(x, memory);
  return x;
}

std::pair<Tensor, Tensor> Network::decode_body(const Tensor& raw) const {
  const auto B = static_cast<std::int64_t>(raw.size(0));
  const Tensor rot = ops::gram_schmidt(reshape(slice(raw, 1, 0, 138), {B, 23, 6}));
  return {rot, slice(raw, 1, 138, kBodyOutputs)};
}

std::pair<Tensor, Tensor> Network::decode_camera(const Tensor& raw) const {
  return {ops::gram_schmidt(slice(raw, 2, 0, 6)), slice(raw, 2, 6, 9)};
}

namespace {

void check_tokens(const Tensor& tokens) {
  if (tokens.dim() != 4) throw ShapeError("tokens: expected [B, N, T, C], got " + shape_str(tokens.shape()));
}

}  // namespace

std::pair<Tensor, Tensor> Network::cpe(const Tensor& tokens) const {
  check_tokens(tokens);
  const std::size_t N = tokens.size(1);
  if (N == 0) throw ViewCountError("at least one view is required");
  // One F_c evaluation per view keeps every view's result independent of the others.
  std::vector<Tensor> raws;
  raws.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Tensor pooled = ops::mean(slice(tokens, 1, i, i + 1), 2);  // [B, 1, C]
    raws.push_back(f_c(pooled));
  }
  return decode_camera(N == 1 ? raws[0] : ops::concat(raws, 1));
}

std::pair<Tensor, Tensor> Network::avf(const Tensor& tokens, std::span<const std::int64_t> slots) const {
  check_tokens(tokens);
  if (decoder.empty()) throw std::logic_error("avf: variant has no decoder");
  const auto s = resolve_slots(tokens.size(1), slots);
  const auto B = tokens.size(0);
  const auto C = static_cast<std::int64_t>(cfg_.channels);
  const Tensor q = Tensor::zeros({B, 1, cfg_.channels}, dtype_) + query;
  const Tensor q_hat = decoder_forward(q, memory_tokens(tokens, s));
  return decode_body(f_b(reshape(q_hat, {static_cast<std::int64_t>(B), C})));
}

Prediction Network::head(const Tensor& tokens, std::span<const std::int64_t> slots) const {
  check_tokens(tokens);
  const std::size_t B = tokens.size(0);
  const std::size_t N = tokens.size(1);
  const auto Bi = static_cast<std::int64_t>(B);
  const auto Ni = static_cast<std::int64_t>(N);
  const auto C = static_cast<std::int64_t>(cfg_.channels);
  Prediction p;
  switch (cfg_.variant) {
    case Variant::a: {
      if (N != cfg_.train_views) {
        throw ViewCountError("variant a is built for " + std::to_string(cfg_.train_views) +
                             " views; its input dimension does not match " + std::to_string(N) + " views");
      }
      const Tensor pooled = reshape(ops::mean(tokens, 2), {Bi, Ni * C});
      const Tensor raw = joint_mlp(pooled);
      std::tie(p.body_rotation, p.beta) = decode_body(slice(raw, 1, 0, kBodyOutputs));
      const Tensor cams = reshape(slice(raw, 1, kBodyOutputs, raw.size(1)), {Bi, Ni, 9});
      std::tie(p.cam_rotation, p.cam_translation) = decode_camera(cams);
      break;
    }
    case Variant::b: {
      if (N != cfg_.train_views) {
        throw ViewCountError("variant b has " + std::to_string(cfg_.train_views) +
                             " camera query tokens but received " + std::to_string(N) + " views");
      }
      // Camera token i is bound to view i, so slots stay in view order.
      const auto s = resolve_slots(N, {});
      const Tensor qs = ops::concat({camera_queries, reshape(query, {1, C})}, 0);
      const Tensor q = Tensor::zeros({B, cfg_.train_views + 1, cfg_.channels}, dtype_) + qs;
      const Tensor out = decoder_forward(q, memory_tokens(tokens, s));
      std::tie(p.cam_rotation, p.cam_translation) = decode_camera(f_c(slice(out, 1, 0, cfg_.train_views)));
      std::tie(p.body_rotation, p.beta) =
          decode_body(f_b(reshape(slice(out, 1, cfg_.train_views, cfg_.train_views + 1), {Bi, C})));
      break;
    }
    case Variant::c: {
      resolve_slots(N, {});
      std::tie(p.cam_rotation, p.cam_translation) = cpe(tokens);
      const Tensor pooled = ops::mean(tokens, 2);                          // [B, N, C]
      const Tensor scores = reshape(score_mlp(pooled), {Bi, Ni});
      const Tensor w = reshape(ops::softmax(scores), {Bi, Ni, 1});
      const Tensor fused = ops::sum(pooled * w, 1);                      // [B, C]
      std::tie(p.body_rotation, p.beta) = decode_body(f_b(fused));
      break;
    }
    case Variant::d: {
      std::tie(p.cam_rotation, p.cam_translation) = cpe(tokens);
      std::tie(p.body_rotation, p.beta) = avf(tokens, slots);
      break;
    }
  }
  return p;
}

Prediction Network::forward(const Tensor& images, std::span<const std::int64_t> slots) const {
  if (images.dim() != 5) {
    throw ShapeError("forward: expected images [B, N, H, W, Cin], got " + shape_str(images.shape()));
  }
  const auto B = static_cast<std::int64_t>(images.size(0));
  const auto N = static_cast<std::int64_t>(images.size(1));
  const Tensor flat = reshape(images, {B * N, static_cast<std::int64_t>(images.size(2)),
                                       static_cast<std::int64_t>(images.size(3)),
                                       static_cast<std::int64_t>(images.size(4))});
  const Tensor tokens = encoder(flat);
  return head(reshape(tokens, {B, N, static_cast<std::int64_t>(tokens.size(1)),
                               static_cast<std::int64_t>(tokens.size(2))}),
              slots);
}

}  // namespace mvhmr::net
