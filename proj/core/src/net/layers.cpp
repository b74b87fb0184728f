#include "mvhmr/net/layers.hpp"

#include <cmath>

#include "mvhmr/tensor/ops.hpp"

namespace mvhmr::net {

std::size_t count_params(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor->numel();
  return n;
}

void cast_params(const ParamList& params, Dtype dtype) {
  for (const auto& p : params) {
    Tensor t = p.tensor->to(dtype);
    t.set_requires_grad(true);
    *p.tensor = t;
  }
}

Tensor Init::normal(Shape shape, double stddev, Dtype dtype) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t = Tensor::zeros(std::move(shape), dtype);
  for (std::size_t i = 0; i < t.numel(); ++i) t.set_value(i, dist(rng_));
  t.set_requires_grad(true);
  return t;
}

Tensor Init::zeros(Shape shape, Dtype dtype) {
  Tensor t = Tensor::zeros(std::move(shape), dtype);
  t.set_requires_grad(true);
  return t;
}

Tensor Init::ones(Shape shape, Dtype dtype) {
  Tensor t = Tensor::ones(std::move(shape), dtype);
  t.set_requires_grad(true);
  return t;
}

Linear::Linear(std::size_t in, std::size_t out, Init& init, Dtype dtype)
    : weight(init.normal({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), dtype)),
      bias(init.zeros({out}, dtype)) {}

Tensor Linear::operator()(const Tensor& x) const { return ops::matmul(x, weight) + bias; }

void Linear::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

LayerNorm::LayerNorm(std::size_t dim, Init& init, Dtype dtype)
    : gamma(init.ones({dim}, dtype)), beta(init.zeros({dim}, dtype)) {}

Tensor LayerNorm::operator()(const Tensor& x) const { return ops::layer_norm(x) * gamma + beta; }

void LayerNorm::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".gamma", &gamma});
  out.push_back({prefix + ".beta", &beta});
}

Conv2d::Conv2d(std::size_t in, std::size_t out, std::size_t k, std::size_t stride_, std::size_t padding_,
               Init& init, Dtype dtype)
    : weight(init.normal({k, k, in, out}, std::sqrt(2.0 / static_cast<double>(k * k * in)), dtype)),
      bias(init.zeros({out}, dtype)),
      stride(stride_),
      padding(padding_) {}

Tensor Conv2d::operator()(const Tensor& x) const { return ops::conv2d(x, weight, stride, padding) + bias; }

void Conv2d::collect(const std::string& prefix, ParamList& out) {
  out.push_back({prefix + ".weight", &weight});
  out.push_back({prefix + ".bias", &bias});
}

Mlp::Mlp(const std::vector<std::size_t>& widths, Init& init, Dtype dtype) {
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) layers.emplace_back(widths[i], widths[i + 1], init, dtype);
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](h);
    if (i + 1 < layers.size()) h = ops::gelu(h);
  }
  return h;
}

void Mlp::collect(const std::string& prefix, ParamList& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i].collect(prefix + "." + std::to_string(i), out);
}

std::size_t Mlp::macs(std::size_t rows) const {
  std::size_t n = 0;
  for (const auto& l : layers) n += rows * l.in_features() * l.out_features();
  return n;
}

MultiHeadAttention::MultiHeadAttention(std::size_t dim, std::size_t heads_, Init& init, Dtype dtype)
    : q(dim, dim, init, dtype), k(dim, dim, init, dtype), v(dim, dim, init, dtype), o(dim, dim, init, dtype),
      heads(heads_) {
  if (heads == 0 || dim % heads != 0) {
    throw std::invalid_argument("attention: dim " + std::to_string(dim) + " is not divisible by " +
                                std::to_string(heads) + " heads");
  }
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& memory) const {
  const auto B = static_cast<std::int64_t>(query.size(0));
  const auto lq = static_cast<std::int64_t>(query.size(1));
  const auto lk = static_cast<std::int64_t>(memory.size(1));
  const auto C = static_cast<std::int64_t>(query.size(2));
  const auto H = static_cast<std::int64_t>(heads);
  const std::int64_t D = C / H;
  auto split = [&](const Tensor& x, std::int64_t len) {
    return ops::reshape(ops::permute(ops::reshape(x, {B, len, H, D}), {0, 2, 1, 3}), {B * H, len, D});
  };
  const Tensor Q = split(q(query), lq);
  const Tensor K = split(k(memory), lk);
  const Tensor V = split(v(memory), lk);
  const Tensor scores = ops::mul_scalar(ops::bmm(Q, ops::transpose(K, 1, 2)), 1.0 / std::sqrt(static_cast<double>(D)));
  const Tensor ctx = ops::bmm(ops::softmax(scores), V);  // [B*H, lq, D]
  const Tensor merged = ops::reshape(ops::permute(ops::reshape(ctx, {B, H, lq, D}), {0, 2, 1, 3}), {B, lq, C});
  return o(merged);
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) {
  q.collect(prefix + ".q", out);
  k.collect(prefix + ".k", out);
  v.collect(prefix + ".v", out);
  o.collect(prefix + ".o", out);
}

std::size_t MultiHeadAttention::macs(std::size_t lq, std::size_t lk) const {
  const std::size_t C = q.in_features();
  return 2 * lq * C * C + 2 * lk * C * C + 2 * lq * lk * C;
}

DecoderLayer::DecoderLayer(std::size_t dim, std::size_t heads, std::size_t mlp_ratio, Init& init, Dtype dtype)
    : ln_self(dim, init, dtype), ln_cross(dim, init, dtype), ln_mlp(dim, init, dtype),
      self_attn(dim, heads, init, dtype), cross_attn(dim, heads, init, dtype),
      mlp({dim, dim * mlp_ratio, dim}, init, dtype) {}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& memory) const {
  Tensor h = ln_self(x);
  Tensor y = x + self_attn(h, h);
  y = y + cross_attn(ln_cross(y), memory);
  return y + mlp(ln_mlp(y));
}

void DecoderLayer::collect(const std::string& prefix, ParamList& out) {
  ln_self.collect(prefix + ".ln_self", out);
  self_attn.collect(prefix + ".self_attn", out);
  ln_cross.collect(prefix + ".ln_cross", out);
  cross_attn.collect(prefix + ".cross_attn", out);
  ln_mlp.collect(prefix + ".ln_mlp", out);
  mlp.collect(prefix + ".mlp", out);
}

std::size_t DecoderLayer::macs(std::size_t lq, std::size_t lk) const {
  return self_attn.macs(lq, lq) + cross_attn.macs(lq, lk) + mlp.macs(lq);
}

}  // namespace mvhmr::net
