#include <numeric>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::TensorImpl;
using detail::wdata;

namespace {

// dst[perm index] = src[index]; `axes[d]` is the source axis of output axis d.
template <typename T>
void permute_copy(const T* src, T* dst, const Shape& src_shape, std::span<const std::size_t> axes,
                  bool accumulate) {
  const std::size_t rank = src_shape.size();
  const auto src_strides = detail::strides_of(src_shape);
  Shape out_shape(rank);
  std::vector<std::size_t> stride_in_out_order(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    out_shape[d] = src_shape[axes[d]];
    stride_in_out_order[d] = src_strides[axes[d]];
  }
  const std::size_t n = shape_numel(src_shape);
  if (n == 0) return;
  // Innermost run is contiguous in the source when the last axis is kept.
  std::vector<std::size_t> idx(rank, 0);
  std::size_t s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (accumulate) {
      dst[s] += src[i];
    } else {
      dst[i] = src[s];
    }
    for (std::size_t d = rank; d-- > 0;) {
      s += stride_in_out_order[d];
      if (++idx[d] < out_shape[d]) break;
      s -= stride_in_out_order[d] * out_shape[d];
      idx[d] = 0;
    }
  }
}

}  // namespace

Tensor permute(const Tensor& x, std::span<const std::size_t> axes) {
  const std::size_t rank = x.dim();
  if (axes.size() != rank) {
    throw ShapeError("permute: " + std::to_string(axes.size()) + " axes given for shape " +
                     shape_str(x.shape()));
  }
  std::vector<bool> seen(rank, false);
  for (auto a : axes) {
    if (a >= rank || seen[a]) {
      throw ShapeError("permute: invalid axis permutation for shape " + shape_str(x.shape()));
    }
    seen[a] = true;
  }
  Shape out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = x.shape()[axes[d]];
  std::vector<std::size_t> perm(axes.begin(), axes.end());
  auto out = detail::make_impl(out_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    permute_copy<T>(cdata<T>(x.impl()), wdata<T>(*out), x.shape(), perm, false);
  });
  return detail::finish(std::move(out), "permute", {x},
                        [x, perm](const TensorImpl&, const TensorImpl& g) {
                          // Scatter the output gradient back through the same walk.
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            permute_copy<T>(cdata<T>(g), grad_data<T>(x.impl()), x.shape(), perm,
                                            true);
                          });
                        });
}

Tensor permute(const Tensor& x, std::initializer_list<std::size_t> axes) {
  return permute(x, std::span<const std::size_t>(axes.begin(), axes.size()));
}

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  const std::size_t a0 = detail::normalize_axis("transpose", axis0, x.dim());
  const std::size_t a1 = detail::normalize_axis("transpose", axis1, x.dim());
  std::vector<std::size_t> axes(x.dim());
  std::iota(axes.begin(), axes.end(), 0);
  std::swap(axes[a0], axes[a1]);
  return permute(x, axes);
}

Tensor reshape(const Tensor& x, std::span<const std::int64_t> shape) {
  Shape out_shape(shape.size());
  std::size_t known = 1;
  int infer = -1;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (shape[d] == -1) {
      if (infer >= 0) throw ShapeError("reshape: more than one inferred dimension");
      infer = static_cast<int>(d);
    } else if (shape[d] < 0) {
      throw ShapeError("reshape: negative dimension");
    } else {
      out_shape[d] = static_cast<std::size_t>(shape[d]);
      known *= out_shape[d];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.numel() % known != 0) {
      detail::shape_error("reshape", x.shape(), out_shape, "cannot infer dimension");
    }
    out_shape[static_cast<std::size_t>(infer)] = x.numel() / known;
  }
  if (shape_numel(out_shape) != x.numel()) {
    detail::shape_error("reshape", x.shape(), out_shape, "element count differs");
  }
  auto out = detail::make_impl(out_shape, x.dtype());
  out->data = x.impl().data;
  return detail::finish(std::move(out), "reshape", {x},
                        [x](const TensorImpl&, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* pg = cdata<T>(g);
                            T* gx = grad_data<T>(x.impl());
                            const std::size_t n = x.numel();
                            for (std::size_t i = 0; i < n; ++i) gx[i] += pg[i];
                          });
                        });
}

Tensor reshape(const Tensor& x, std::initializer_list<std::int64_t> shape) {
  return reshape(x, std::span<const std::int64_t>(shape.begin(), shape.size()));
}

Tensor concat(std::span<const Tensor> xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  const Tensor& first = xs[0];
  const std::size_t ax = detail::normalize_axis("concat", axis, first.dim());
  Shape out_shape = first.shape();
  out_shape[ax] = 0;
  for (const auto& t : xs) {
    detail::require_same_dtype("concat", first, t);
    bool ok = t.dim() == first.dim();
    for (std::size_t d = 0; ok && d < t.dim(); ++d) {
      if (d != ax && t.shape()[d] != first.shape()[d]) ok = false;
    }
    if (!ok) detail::shape_error("concat", first.shape(), t.shape());
    out_shape[ax] += t.shape()[ax];
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= out_shape[d];
  std::size_t inner = 1;
  for (std::size_t d = ax + 1; d < out_shape.size(); ++d) inner *= out_shape[d];
  const std::size_t out_run = out_shape[ax] * inner;

  auto out = detail::make_impl(out_shape, first.dtype());
  std::vector<std::size_t> offsets;
  dispatch_dtype(first.dtype(), [&]<typename T>() {
    T* po = wdata<T>(*out);
    std::size_t off = 0;
    for (const auto& t : xs) {
      offsets.push_back(off);
      const std::size_t run = t.shape()[ax] * inner;
      const T* pt = cdata<T>(t.impl());
      for (std::size_t o = 0; o < outer; ++o) {
        std::copy(pt + o * run, pt + (o + 1) * run, po + o * out_run + off);
      }
      off += run;
    }
  });
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  return detail::finish(
      std::move(out), "concat", inputs,
      [inputs, offsets, outer, inner, out_run, ax](const TensorImpl&, const TensorImpl& g) {
        dispatch_dtype(g.dtype, [&]<typename T>() {
          const T* pg = cdata<T>(g);
          for (std::size_t i = 0; i < inputs.size(); ++i) {
            const Tensor& t = inputs[i];
            if (!t.requires_grad()) continue;
            const std::size_t run = t.shape()[ax] * inner;
            T* gt = grad_data<T>(t.impl());
            for (std::size_t o = 0; o < outer; ++o) {
              const T* src = pg + o * out_run + offsets[i];
              T* dst = gt + o * run;
              for (std::size_t j = 0; j < run; ++j) dst[j] += src[j];
            }
          }
        });
      });
}

Tensor concat(std::initializer_list<Tensor> xs, int axis) {
  return concat(std::span<const Tensor>(xs.begin(), xs.size()), axis);
}

Tensor slice(const Tensor& x, int axis, std::size_t start, std::size_t end) {
  const std::size_t ax = detail::normalize_axis("slice", axis, x.dim());
  if (start > end || end > x.shape()[ax]) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(end) +
                     ") invalid for axis " + std::to_string(ax) + " of shape " +
                     shape_str(x.shape()));
  }
  Shape out_shape = x.shape();
  out_shape[ax] = end - start;
  std::size_t outer = 1;
  for (std::size_t d = 0; d < ax; ++d) outer *= x.shape()[d];
  std::size_t inner = 1;
  for (std::size_t d = ax + 1; d < x.dim(); ++d) inner *= x.shape()[d];
  const std::size_t in_run = x.shape()[ax] * inner;
  const std::size_t out_run = (end - start) * inner;
  const std::size_t off = start * inner;

  auto out = detail::make_impl(out_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(px + o * in_run + off, px + o * in_run + off + out_run, po + o * out_run);
    }
  });
  return detail::finish(std::move(out), "slice", {x},
                        [x, outer, in_run, out_run, off](const TensorImpl&, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* pg = cdata<T>(g);
                            T* gx = grad_data<T>(x.impl());
                            for (std::size_t o = 0; o < outer; ++o) {
                              for (std::size_t j = 0; j < out_run; ++j) {
                                gx[o * in_run + off + j] += pg[o * out_run + j];
                              }
                            }
                          });
                        });
}

}  // namespace mvhmr::ops
