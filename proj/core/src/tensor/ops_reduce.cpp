#include <limits>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::TensorImpl;
using detail::wdata;

namespace {

struct AxisSplit {
  std::size_t outer = 1, len = 1, inner = 1;
  Shape out_shape;
};

AxisSplit split_axis(std::string_view op, const Tensor& x, int axis, bool keepdim) {
  const std::size_t ax = detail::normalize_axis(op, axis, x.dim());
  AxisSplit s;
  for (std::size_t d = 0; d < ax; ++d) s.outer *= x.shape()[d];
  s.len = x.shape()[ax];
  for (std::size_t d = ax + 1; d < x.dim(); ++d) s.inner *= x.shape()[d];
  for (std::size_t d = 0; d < x.dim(); ++d) {
    if (d != ax) {
      s.out_shape.push_back(x.shape()[d]);
    } else if (keepdim) {
      s.out_shape.push_back(1);
    }
  }
  return s;
}

// Sum over the axis scaled by `scale` (1 for sum, 1/len for mean).
Tensor scaled_sum(std::string_view op, const Tensor& x, int axis, bool keepdim, bool average) {
  const AxisSplit s = split_axis(op, x, axis, keepdim);
  if (average && s.len == 0) throw ShapeError(std::string(op) + ": mean over empty axis");
  const double scale = average ? 1.0 / static_cast<double>(s.len) : 1.0;
  auto out = detail::make_impl(s.out_shape, x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t o = 0; o < s.outer; ++o) {
      T* row = po + o * s.inner;
      for (std::size_t l = 0; l < s.len; ++l) {
        const T* src = px + (o * s.len + l) * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) row[i] += src[i];
      }
      if (average) {
        for (std::size_t i = 0; i < s.inner; ++i) row[i] *= static_cast<T>(scale);
      }
    }
  });
  return detail::finish(std::move(out), op, {x}, [x, s, scale](const TensorImpl&, const TensorImpl& g) {
    dispatch_dtype(g.dtype, [&]<typename T>() {
      const T* pg = cdata<T>(g);
      T* gx = grad_data<T>(x.impl());
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t l = 0; l < s.len; ++l) {
          T* dst = gx + (o * s.len + l) * s.inner;
          for (std::size_t i = 0; i < s.inner; ++i) {
            dst[i] += pg[o * s.inner + i] * static_cast<T>(scale);
          }
        }
      }
    });
  });
}

}  // namespace

Tensor sum(const Tensor& x, int axis, bool keepdim) {
  return scaled_sum("sum", x, axis, keepdim, false);
}

Tensor mean(const Tensor& x, int axis, bool keepdim) {
  return scaled_sum("mean", x, axis, keepdim, true);
}

Tensor max(const Tensor& x, int axis, bool keepdim) {
  const AxisSplit s = split_axis("max", x, axis, keepdim);
  if (s.len == 0) throw ShapeError("max: reduction over empty axis");
  auto out = detail::make_impl(s.out_shape, x.dtype());
  // Gradient goes to the first maximal element only.
  auto argmax = std::make_shared<std::vector<std::size_t>>(s.outer * s.inner);
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        std::size_t best = 0;
        T bv = px[o * s.len * s.inner + i];
        for (std::size_t l = 1; l < s.len; ++l) {
          const T v = px[(o * s.len + l) * s.inner + i];
          if (v > bv) {
            bv = v;
            best = l;
          }
        }
        po[o * s.inner + i] = bv;
        (*argmax)[o * s.inner + i] = best;
      }
    }
  });
  return detail::finish(std::move(out), "max", {x}, [x, s, argmax](const TensorImpl&, const TensorImpl& g) {
    dispatch_dtype(g.dtype, [&]<typename T>() {
      const T* pg = cdata<T>(g);
      T* gx = grad_data<T>(x.impl());
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t l = (*argmax)[o * s.inner + i];
          gx[(o * s.len + l) * s.inner + i] += pg[o * s.inner + i];
        }
      }
    });
  });
}

Tensor sum_all(const Tensor& x) {
  auto out = detail::make_impl({}, x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    T acc = 0;
    for (T v : x.data<T>()) acc += v;
    wdata<T>(*out)[0] = acc;
  });
  return detail::finish(std::move(out), "sum_all", {x}, [x](const TensorImpl&, const TensorImpl& g) {
    dispatch_dtype(g.dtype, [&]<typename T>() {
      const T gv = cdata<T>(g)[0];
      T* gx = grad_data<T>(x.impl());
      const std::size_t n = x.numel();
      for (std::size_t i = 0; i < n; ++i) gx[i] += gv;
    });
  });
}

Tensor mean_all(const Tensor& x) {
  if (x.numel() == 0) throw ShapeError("mean_all: empty tensor");
  return mul_scalar(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

}  // namespace mvhmr::ops
