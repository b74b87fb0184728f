#include <cmath>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::TensorImpl;
using detail::wdata;

Tensor softmax(const Tensor& x) {
  if (x.dim() == 0) throw ShapeError("softmax: needs at least one axis, got shape ()");
  const std::size_t len = x.shape().back();
  if (len == 0) throw ShapeError("softmax: empty last axis in shape " + shape_str(x.shape()));
  const std::size_t rows = x.numel() / len;
  auto out = detail::make_impl(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* in = px + r * len;
      T* y = po + r * len;
      T m = in[0];
      for (std::size_t i = 1; i < len; ++i) m = std::max(m, in[i]);
      T z = 0;
      for (std::size_t i = 0; i < len; ++i) {
        y[i] = std::exp(in[i] - m);
        z += y[i];
      }
      for (std::size_t i = 0; i < len; ++i) y[i] /= z;
    }
  });
  return detail::finish(std::move(out), "softmax", {x},
                        [x, rows, len](const TensorImpl& o, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* py = cdata<T>(o);
                            const T* pg = cdata<T>(g);
                            T* gx = grad_data<T>(x.impl());
                            for (std::size_t r = 0; r < rows; ++r) {
                              const T* y = py + r * len;
                              const T* gy = pg + r * len;
                              T dot = 0;
                              for (std::size_t i = 0; i < len; ++i) dot += y[i] * gy[i];
                              for (std::size_t i = 0; i < len; ++i) {
                                gx[r * len + i] += y[i] * (gy[i] - dot);
                              }
                            }
                          });
                        });
}

Tensor layer_norm(const Tensor& x, double eps) {
  if (x.dim() == 0) throw ShapeError("layer_norm: needs at least one axis, got shape ()");
  const std::size_t len = x.shape().back();
  if (len == 0) throw ShapeError("layer_norm: empty last axis in shape " + shape_str(x.shape()));
  const std::size_t rows = x.numel() / len;
  auto out = detail::make_impl(x.shape(), x.dtype());
  // 1/sigma per row, kept for backward.
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* in = px + r * len;
      T mu = 0;
      for (std::size_t i = 0; i < len; ++i) mu += in[i];
      mu /= static_cast<T>(len);
      T var = 0;
      for (std::size_t i = 0; i < len; ++i) var += (in[i] - mu) * (in[i] - mu);
      var /= static_cast<T>(len);
      const T is = T(1) / std::sqrt(var + static_cast<T>(eps));
      (*inv_std)[r] = is;
      for (std::size_t i = 0; i < len; ++i) po[r * len + i] = (in[i] - mu) * is;
    }
  });
  return detail::finish(
      std::move(out), "layer_norm", {x}, [x, rows, len, inv_std](const TensorImpl& o, const TensorImpl& g) {
        dispatch_dtype(g.dtype, [&]<typename T>() {
          const T* py = cdata<T>(o);
          const T* pg = cdata<T>(g);
          T* gx = grad_data<T>(x.impl());
          const T inv_len = T(1) / static_cast<T>(len);
          for (std::size_t r = 0; r < rows; ++r) {
            const T* y = py + r * len;
            const T* gy = pg + r * len;
            T mg = 0, mgy = 0;
            for (std::size_t i = 0; i < len; ++i) {
              mg += gy[i];
              mgy += gy[i] * y[i];
            }
            mg *= inv_len;
            mgy *= inv_len;
            const T is = static_cast<T>((*inv_std)[r]);
            for (std::size_t i = 0; i < len; ++i) gx[r * len + i] += is * (gy[i] - mg - y[i] * mgy);
          }
        });
      });
}

Tensor embedding(const Tensor& table, std::span<const std::int64_t> indices) {
  if (table.dim() != 2) {
    throw ShapeError("embedding: table must be [S, C], got " + shape_str(table.shape()));
  }
  const std::size_t rows = table.shape()[0];
  const std::size_t c = table.shape()[1];
  std::vector<std::size_t> idx(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= rows) {
      throw std::out_of_range("embedding: index " + std::to_string(indices[i]) +
                              " outside table of " + std::to_string(rows) + " rows");
    }
    idx[i] = static_cast<std::size_t>(indices[i]);
  }
  auto out = detail::make_impl({idx.size(), c}, table.dtype());
  dispatch_dtype(table.dtype(), [&]<typename T>() {
    const T* pt = cdata<T>(table.impl());
    T* po = wdata<T>(*out);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(pt + idx[i] * c, pt + (idx[i] + 1) * c, po + i * c);
    }
  });
  return detail::finish(std::move(out), "embedding", {table},
                        [table, idx, c](const TensorImpl&, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* pg = cdata<T>(g);
                            T* gt = grad_data<T>(table.impl());
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              for (std::size_t j = 0; j < c; ++j) gt[idx[i] * c + j] += pg[i * c + j];
                            }
                          });
                        });
}

}  // namespace mvhmr::ops
