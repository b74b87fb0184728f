#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvhmr/tensor/tensor.hpp"

// Differentiable tensor ops. Binary elementwise ops accept operands of equal
// shape, or one operand whose shape right-aligns against the other with every
// dimension either equal or 1 (bias-style broadcast). The result always has
// the shape of the larger operand; anything else is a ShapeError.
namespace mvhmr::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double s);
Tensor mul_scalar(const Tensor& x, double s);
Tensor neg(const Tensor& x);

Tensor exp(const Tensor& x);
// Domain error on negative entries.
Tensor log(const Tensor& x);
// Domain error on negative entries.
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor relu(const Tensor& x);
// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Entries below `lo` are replaced by `lo`; gradient is zero there.
Tensor clamp_min(const Tensor& x, double lo);

// a: [..., K], b: [K, N] -> [..., N]
Tensor matmul(const Tensor& a, const Tensor& b);
// a: [B, M, K], b: [B, K, N] -> [B, M, N]
Tensor bmm(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& x, int axis0, int axis1);
Tensor permute(const Tensor& x, std::span<const std::size_t> axes);
Tensor permute(const Tensor& x, std::initializer_list<std::size_t> axes);
// One entry of `shape` may be -1 and is inferred.
Tensor reshape(const Tensor& x, std::span<const std::int64_t> shape);
Tensor reshape(const Tensor& x, std::initializer_list<std::int64_t> shape);
Tensor concat(std::span<const Tensor> xs, int axis);
Tensor concat(std::initializer_list<Tensor> xs, int axis);
// Half-open range [start, end) along `axis`.
Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t end);

Tensor sum(const Tensor& x, int axis, bool keepdim = false);
Tensor mean(const Tensor& x, int axis, bool keepdim = false);
Tensor max(const Tensor& x, int axis, bool keepdim = false);
// Rank-0 results.
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

// Over the last axis, max-subtracted.
Tensor softmax(const Tensor& x);
// Normalizes over the last axis without affine parameters.
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

// x: [N, H, W, Cin] (NHWC), weight: [kh, kw, Cin, Cout] -> [N, Ho, Wo, Cout]
Tensor conv2d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t padding);

// table: [S, C]; returns [indices.size(), C].
Tensor embedding(const Tensor& table, std::span<const std::int64_t> indices);

// Axis-angle [..., 3] -> rotation matrices [..., 3, 3].
Tensor rodrigues(const Tensor& axis_angle);
// 6D rotation [..., 6] (two stacked 3-vectors) -> [..., 3, 3] with the
// Gram-Schmidt basis as columns. Degenerate inputs fall back to identity
// columns (see rotation6d_eps).
Tensor gram_schmidt(const Tensor& six_d);
inline constexpr double rotation6d_eps = 1e-8;

}  // namespace mvhmr::ops

namespace mvhmr {

inline Tensor operator+(const Tensor& a, const Tensor& b) { return ops::add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return ops::sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return ops::mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return ops::div(a, b); }
inline Tensor operator-(const Tensor& x) { return ops::neg(x); }
inline Tensor operator*(const Tensor& x, double s) { return ops::mul_scalar(x, s); }
inline Tensor operator*(double s, const Tensor& x) { return ops::mul_scalar(x, s); }
inline Tensor operator+(const Tensor& x, double s) { return ops::add_scalar(x, s); }

}  // namespace mvhmr
