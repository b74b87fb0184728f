#pragma once

#include <random>
#include <string>
#include <vector>

#include "mvhmr/tensor/tensor.hpp"

namespace mvhmr::net {

struct NamedParam {
  std::string name;
  Tensor* tensor;
};
using ParamList = std::vector<NamedParam>;

std::size_t count_params(const ParamList& params);

// Replaces every parameter with a trainable copy in `dtype`.
void cast_params(const ParamList& params, Dtype dtype);

// Weight initialization source. Draws are deterministic for a given seed on a
// given standard library.
class Init {
 public:
  explicit Init(std::uint64_t seed) : rng_(seed) {}
  Tensor normal(Shape shape, double stddev, Dtype dtype);
  Tensor zeros(Shape shape, Dtype dtype);
  Tensor ones(Shape shape, Dtype dtype);

 private:
  std::mt19937_64 rng_;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Init& init, Dtype dtype);
  std::size_t in_features() const { return weight.size(0); }
  std::size_t out_features() const { return weight.size(1); }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;

  LayerNorm() = default;
  LayerNorm(std::size_t dim, Init& init, Dtype dtype);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

struct Conv2d {
  Tensor weight;  // [k, k, in, out]
  Tensor bias;    // [out]
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride, std::size_t padding,
         Init& init, Dtype dtype);
  std::size_t kernel() const { return weight.size(0); }
  std::size_t in_channels() const { return weight.size(2); }
  std::size_t out_channels() const { return weight.size(3); }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
};

// Linear layers with GELU between them (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  Mlp() = default;
  Mlp(const std::vector<std::size_t>& widths, Init& init, Dtype dtype);
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out);
  // Multiply-adds for `rows` input rows.
  std::size_t macs(std::size_t rows) const;
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Init& init, Dtype dtype);
  // query: [B, Lq, C], memory: [B, Lk, C] -> [B, Lq, C]
  Tensor operator()(const Tensor& query, const Tensor& memory) const;
  void collect(const std::string& prefix, ParamList& out);
  std::size_t macs(std::size_t lq, std::size_t lk) const;
};

// Pre-norm block: x += SA(LN(x)); x += CA(LN(x), mem); x += MLP(LN(x)).
// With zero output projections every sublayer is the identity.
struct DecoderLayer {
  LayerNorm ln_self, ln_cross, ln_mlp;
  MultiHeadAttention self_attn, cross_attn;
  Mlp mlp;

  DecoderLayer() = default;
  DecoderLayer(std::size_t dim, std::size_t heads, std::size_t mlp_ratio, Init& init, Dtype dtype);
  Tensor operator()(const Tensor& x, const Tensor& memory) const;
  void collect(const std::string& prefix, ParamList& out);
  std::size_t macs(std::size_t lq, std::size_t lk) const;
};

}  // namespace mvhmr::net
