#include <Eigen/Core>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::TensorImpl;
using detail::wdata;

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const RowMat<T>>;
template <typename T>
using Map = Eigen::Map<RowMat<T>>;

// Below this many multiply-adds the Eigen call overhead dominates.
constexpr std::size_t kSmallGemm = 2048;

// out (+)= a[m,k] * b[k,n], with optional transposes of a or b as stored.
template <typename T>
void gemm(const T* a, const T* b, T* out, std::size_t m, std::size_t k, std::size_t n,
          bool trans_a, bool trans_b, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k),
             N = static_cast<Eigen::Index>(n);
  if (m * k * n <= kSmallGemm) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        T acc = accumulate ? out[i * n + j] : T(0);
        for (std::size_t p = 0; p < k; ++p) {
          const T av = trans_a ? a[p * m + i] : a[i * k + p];
          const T bv = trans_b ? b[j * k + p] : b[p * n + j];
          acc += av * bv;
        }
        out[i * n + j] = acc;
      }
    }
    return;
  }
  Map<T> C(out, M, N);
  auto run = [&](const auto& A, const auto& B) {
    if (accumulate) {
      C.noalias() += A * B;
    } else {
      C.noalias() = A * B;
    }
  };
  if (trans_a && trans_b) {
    run(MapC<T>(a, K, M).transpose(), MapC<T>(b, N, K).transpose());
  } else if (trans_a) {
    run(MapC<T>(a, K, M).transpose(), MapC<T>(b, K, N));
  } else if (trans_b) {
    run(MapC<T>(a, M, K), MapC<T>(b, N, K).transpose());
  } else {
    run(MapC<T>(a, M, K), MapC<T>(b, K, N));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_same_dtype("matmul", a, b);
  if (a.dim() < 1 || b.dim() != 2 || a.shape().back() != b.shape()[0]) {
    detail::shape_error("matmul", a.shape(), b.shape(), "expected [..., K] x [K, N]");
  }
  const std::size_t k = b.shape()[0];
  const std::size_t n = b.shape()[1];
  const std::size_t m = a.numel() / k;
  Shape out_shape = a.shape();
  out_shape.back() = n;
  auto out = detail::make_impl(out_shape, a.dtype());
  dispatch_dtype(a.dtype(), [&]<typename T>() {
    gemm<T>(cdata<T>(a.impl()), cdata<T>(b.impl()), wdata<T>(*out), m, k, n, false, false, false);
  });
  return detail::finish(std::move(out), "matmul", {a, b},
                        [a, b, m, k, n](const TensorImpl&, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* pg = cdata<T>(g);
                            if (a.requires_grad()) {
                              gemm<T>(pg, cdata<T>(b.impl()), grad_data<T>(a.impl()), m, n, k,
                                      false, true, true);
                            }
                            if (b.requires_grad()) {
                              gemm<T>(cdata<T>(a.impl()), pg, grad_data<T>(b.impl()), k, m, n,
                                      true, false, true);
                            }
                          });
                        });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  detail::require_same_dtype("bmm", a, b);
  if (a.dim() != 3 || b.dim() != 3 || a.shape()[0] != b.shape()[0] ||
      a.shape()[2] != b.shape()[1]) {
    detail::shape_error("bmm", a.shape(), b.shape(), "expected [B, M, K] x [B, K, N]");
  }
  const std::size_t batch = a.shape()[0];
  const std::size_t m = a.shape()[1];
  const std::size_t k = a.shape()[2];
  const std::size_t n = b.shape()[2];
  auto out = detail::make_impl({batch, m, n}, a.dtype());
  dispatch_dtype(a.dtype(), [&]<typename T>() {
    const T* pa = cdata<T>(a.impl());
    const T* pb = cdata<T>(b.impl());
    T* po = wdata<T>(*out);
    for (std::size_t i = 0; i < batch; ++i) {
      gemm<T>(pa + i * m * k, pb + i * k * n, po + i * m * n, m, k, n, false, false, false);
    }
  });
  return detail::finish(
      std::move(out), "bmm", {a, b}, [a, b, batch, m, k, n](const TensorImpl&, const TensorImpl& g) {
        dispatch_dtype(g.dtype, [&]<typename T>() {
          const T* pg = cdata<T>(g);
          const T* pa = cdata<T>(a.impl());
          const T* pb = cdata<T>(b.impl());
          T* ga = a.requires_grad() ? grad_data<T>(a.impl()) : nullptr;
          T* gb = b.requires_grad() ? grad_data<T>(b.impl()) : nullptr;
          for (std::size_t i = 0; i < batch; ++i) {
            if (ga) gemm<T>(pg + i * m * n, pb + i * k * n, ga + i * m * k, m, n, k, false, true, true);
            if (gb) gemm<T>(pa + i * m * k, pg + i * m * n, gb + i * k * n, k, m, n, true, false, true);
          }
        });
      });
}

namespace {

struct ConvGeom {
  std::size_t batch, h, w, cin, kh, kw, cout, stride, pad, ho, wo;
  std::size_t rows() const { return batch * ho * wo; }
  std::size_t cols() const { return kh * kw * cin; }
};

// Patch matrix [batch*ho*wo, kh*kw*cin]; out-of-image taps are zero.
template <typename T>
void im2col(const ConvGeom& g, const T* x, T* col) {
  const std::size_t ncols = g.cols();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        T* row = col + ((b * g.ho + oy) * g.wo + ox) * ncols;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            T* dst = row + (ky * g.kw + kx) * g.cin;
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(g.h) || ix >= static_cast<long>(g.w)) {
              std::fill(dst, dst + g.cin, T(0));
            } else {
              const T* src = x + ((b * g.h + static_cast<std::size_t>(iy)) * g.w +
                                  static_cast<std::size_t>(ix)) * g.cin;
              std::copy(src, src + g.cin, dst);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeom& g, const T* col, T* gx) {
  const std::size_t ncols = g.cols();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t oy = 0; oy < g.ho; ++oy) {
      for (std::size_t ox = 0; ox < g.wo; ++ox) {
        const T* row = col + ((b * g.ho + oy) * g.wo + ox) * ncols;
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          for (std::size_t kx = 0; kx < g.kw; ++kx) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
            const T* src = row + (ky * g.kw + kx) * g.cin;
            T* dst = gx + ((b * g.h + static_cast<std::size_t>(iy)) * g.w +
                           static_cast<std::size_t>(ix)) * g.cin;
            for (std::size_t c = 0; c < g.cin; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t padding) {
  detail::require_same_dtype("conv2d", x, weight);
  if (x.dim() != 4 || weight.dim() != 4 || x.shape()[3] != weight.shape()[2]) {
    detail::shape_error("conv2d", x.shape(), weight.shape(),
                        "expected NHWC input and [kh, kw, Cin, Cout] weight");
  }
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  ConvGeom g{};
  g.batch = x.shape()[0];
  g.h = x.shape()[1];
  g.w = x.shape()[2];
  g.cin = x.shape()[3];
  g.kh = weight.shape()[0];
  g.kw = weight.shape()[1];
  g.cout = weight.shape()[3];
  g.stride = stride;
  g.pad = padding;
  if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) {
    detail::shape_error("conv2d", x.shape(), weight.shape(), "kernel larger than padded input");
  }
  g.ho = (g.h + 2 * g.pad - g.kh) / stride + 1;
  g.wo = (g.w + 2 * g.pad - g.kw) / stride + 1;

  auto out = detail::make_impl({g.batch, g.ho, g.wo, g.cout}, x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    std::vector<T> col(g.rows() * g.cols());
    im2col(g, cdata<T>(x.impl()), col.data());
    gemm<T>(col.data(), cdata<T>(weight.impl()), wdata<T>(*out), g.rows(), g.cols(), g.cout, false,
            false, false);
  });
  return detail::finish(std::move(out), "conv2d", {x, weight},
                        [x, weight, g](const TensorImpl&, const TensorImpl& grad) {
                          dispatch_dtype(grad.dtype, [&]<typename T>() {
                            const T* pg = cdata<T>(grad);
                            std::vector<T> col(g.rows() * g.cols());
                            if (weight.requires_grad()) {
                              im2col(g, cdata<T>(x.impl()), col.data());
                              gemm<T>(col.data(), pg, grad_data<T>(weight.impl()), g.cols(),
                                      g.rows(), g.cout, true, false, true);
                            }
                            if (x.requires_grad()) {
                              gemm<T>(pg, cdata<T>(weight.impl()), col.data(), g.rows(), g.cout,
                                      g.cols(), false, true, false);
                              col2im_add(g, col.data(), grad_data<T>(x.impl()));
                            }
                          });
                        });
}

}  // namespace mvhmr::ops
