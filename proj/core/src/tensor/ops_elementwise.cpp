#include <cmath>
#include <numbers>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::ImplPtr;
using detail::TensorImpl;
using detail::wdata;

namespace {

// Maps a flat index of the larger operand to the flat index of the smaller one.
class BroadcastPlan {
 public:
  enum class Kind { same, suffix, prefix, general };

  BroadcastPlan(std::string_view op, const Shape& big, const Shape& small) {
    if (big == small) {
      kind_ = Kind::same;
      return;
    }
    if (!broadcastable(big, small)) detail::shape_error(op, big, small, "not broadcastable");
    const std::size_t rank = big.size();
    Shape aligned(rank, 1);
    std::copy(small.begin(), small.end(), aligned.begin() + static_cast<long>(rank - small.size()));
    small_numel_ = shape_numel(small);

    // suffix: aligned = (1, ..., 1, big[p:])
    std::size_t p = 0;
    while (p < rank && aligned[p] == 1 && big[p] != 1) ++p;
    bool suffix = true;
    for (std::size_t d = p; d < rank; ++d) suffix = suffix && aligned[d] == big[d];
    if (suffix) {
      kind_ = Kind::suffix;
      return;
    }
    // prefix: aligned = (big[:q], 1, ..., 1)
    std::size_t q = rank;
    while (q > 0 && aligned[q - 1] == 1) --q;
    bool prefix = true;
    for (std::size_t d = 0; d < q; ++d) prefix = prefix && aligned[d] == big[d];
    if (prefix) {
      kind_ = Kind::prefix;
      inner_ = 1;
      for (std::size_t d = q; d < rank; ++d) inner_ *= big[d];
      return;
    }
    kind_ = Kind::general;
    big_shape_ = big;
    small_strides_.assign(rank, 0);
    const auto s = detail::strides_of(aligned);
    for (std::size_t d = 0; d < rank; ++d) small_strides_[d] = aligned[d] == 1 ? 0 : s[d];
  }

  static bool broadcastable(const Shape& big, const Shape& small) {
    if (small.size() > big.size()) return false;
    const std::size_t off = big.size() - small.size();
    for (std::size_t d = 0; d < small.size(); ++d) {
      if (small[d] != 1 && small[d] != big[off + d]) return false;
    }
    return true;
  }

  template <typename F>
  void for_each(std::size_t n, F&& f) const {
    switch (kind_) {
      case Kind::same:
        for (std::size_t i = 0; i < n; ++i) f(i, i);
        break;
      case Kind::suffix:
        for (std::size_t i = 0, j = 0; i < n; ++i) {
          f(i, j);
          if (++j == small_numel_) j = 0;
        }
        break;
      case Kind::prefix:
        for (std::size_t i = 0; i < n; ++i) f(i, i / inner_);
        break;
      case Kind::general: {
        const std::size_t rank = big_shape_.size();
        std::vector<std::size_t> idx(rank, 0);
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
          f(i, j);
          for (std::size_t d = rank; d-- > 0;) {
            j += small_strides_[d];
            if (++idx[d] < big_shape_[d]) break;
            j -= small_strides_[d] * big_shape_[d];
            idx[d] = 0;
          }
        }
        break;
      }
    }
  }

 private:
  Kind kind_ = Kind::same;
  std::size_t small_numel_ = 1;
  std::size_t inner_ = 1;
  Shape big_shape_;
  std::vector<std::size_t> small_strides_;
};

struct AddFn {
  template <typename T>
  static T f(T x, T y) { return x + y; }
  template <typename T>
  static T da(T, T) { return T(1); }
  template <typename T>
  static T db(T, T) { return T(1); }
};
struct SubFn {
  template <typename T>
  static T f(T x, T y) { return x - y; }
  template <typename T>
  static T da(T, T) { return T(1); }
  template <typename T>
  static T db(T, T) { return T(-1); }
};
struct MulFn {
  template <typename T>
  static T f(T x, T y) { return x * y; }
  template <typename T>
  static T da(T, T y) { return y; }
  template <typename T>
  static T db(T x, T) { return x; }
};
struct DivFn {
  template <typename T>
  static T f(T x, T y) { return x / y; }
  template <typename T>
  static T da(T, T y) { return T(1) / y; }
  template <typename T>
  static T db(T x, T y) { return -x / (y * y); }
};

template <typename Fn>
Tensor binary(std::string_view op, const Tensor& a, const Tensor& b) {
  detail::require_same_dtype(op, a, b);
  bool a_big = true;
  if (a.shape() != b.shape()) {
    if (BroadcastPlan::broadcastable(a.shape(), b.shape())) {
      a_big = true;
    } else if (BroadcastPlan::broadcastable(b.shape(), a.shape())) {
      a_big = false;
    } else {
      detail::shape_error(op, a.shape(), b.shape());
    }
  }
  const Shape& out_shape = a_big ? a.shape() : b.shape();
  auto plan = std::make_shared<BroadcastPlan>(op, out_shape, a_big ? b.shape() : a.shape());
  auto out = detail::make_impl(out_shape, a.dtype());
  const std::size_t n = out->numel();

  dispatch_dtype(a.dtype(), [&]<typename T>() {
    const T* pa = cdata<T>(a.impl());
    const T* pb = cdata<T>(b.impl());
    T* po = wdata<T>(*out);
    if (a_big) {
      plan->for_each(n, [&](std::size_t i, std::size_t j) { po[i] = Fn::f(pa[i], pb[j]); });
    } else {
      plan->for_each(n, [&](std::size_t i, std::size_t j) { po[i] = Fn::f(pa[j], pb[i]); });
    }
  });

  return detail::finish(
      std::move(out), op, {a, b},
      [a, b, a_big, plan, n](const TensorImpl&, const TensorImpl& g) {
        dispatch_dtype(g.dtype, [&]<typename T>() {
          const T* pa = cdata<T>(a.impl());
          const T* pb = cdata<T>(b.impl());
          const T* pg = cdata<T>(g);
          T* ga = a.requires_grad() ? grad_data<T>(a.impl()) : nullptr;
          T* gb = b.requires_grad() ? grad_data<T>(b.impl()) : nullptr;
          plan->for_each(n, [&](std::size_t i, std::size_t j) {
            const std::size_t ia = a_big ? i : j;
            const std::size_t ib = a_big ? j : i;
            if (ga) ga[ia] += pg[i] * Fn::da(pa[ia], pb[ib]);
            if (gb) gb[ib] += pg[i] * Fn::db(pa[ia], pb[ib]);
          });
        });
      });
}

// Elementwise unary op. `df(x, y)` is dy/dx given input x and output y.
template <typename F, typename DF>
Tensor unary(std::string_view op, const Tensor& x, F f, DF df) {
  auto out = detail::make_impl(x.shape(), x.dtype());
  const std::size_t n = x.numel();
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(x.impl());
    T* po = wdata<T>(*out);
    for (std::size_t i = 0; i < n; ++i) po[i] = f(px[i]);
  });
  return detail::finish(std::move(out), op, {x},
                        [x, df, n](const TensorImpl& o, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* px = cdata<T>(x.impl());
                            const T* py = cdata<T>(o);
                            const T* pg = cdata<T>(g);
                            T* gx = grad_data<T>(x.impl());
                            for (std::size_t i = 0; i < n; ++i) gx[i] += pg[i] * df(px[i], py[i]);
                          });
                        });
}

template <typename Pred>
void check_domain(std::string_view op, const Tensor& x, Pred bad, std::string_view what) {
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    for (T v : x.data<T>()) {
      if (bad(v)) {
        throw std::domain_error(std::string(op) + ": " + std::string(what) + " (got " +
                                std::to_string(static_cast<double>(v)) + ")");
      }
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary<AddFn>("add", a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary<SubFn>("sub", a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary<MulFn>("mul", a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary<DivFn>("div", a, b); }

Tensor add_scalar(const Tensor& x, double s) {
  return unary(
      "add_scalar", x, [s](auto v) { return v + static_cast<decltype(v)>(s); },
      [](auto v, auto) { return decltype(v)(1); });
}

Tensor mul_scalar(const Tensor& x, double s) {
  return unary(
      "mul_scalar", x, [s](auto v) { return v * static_cast<decltype(v)>(s); },
      [s](auto v, auto) { return static_cast<decltype(v)>(s); });
}

Tensor neg(const Tensor& x) {
  return unary(
      "neg", x, [](auto v) { return -v; }, [](auto v, auto) { return static_cast<decltype(v)>(-1); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](auto v) { return std::exp(v); }, [](auto, auto y) { return y; });
}

Tensor log(const Tensor& x) {
  check_domain("log", x, [](auto v) { return !(v > 0); }, "argument must be positive");
  return unary(
      "log", x, [](auto v) { return std::log(v); },
      [](auto v, auto) { return static_cast<decltype(v)>(1) / v; });
}

Tensor sqrt(const Tensor& x) {
  check_domain("sqrt", x, [](auto v) { return v < 0 || std::isnan(v); },
               "argument must be non-negative");
  return unary(
      "sqrt", x, [](auto v) { return std::sqrt(v); },
      [](auto, auto y) { return static_cast<decltype(y)>(0.5) / y; });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](auto v) { return v * v; },
      [](auto v, auto) { return static_cast<decltype(v)>(2) * v; });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](auto v) { return std::abs(v); },
      [](auto v, auto) {
        using T = decltype(v);
        return v > 0 ? T(1) : (v < 0 ? T(-1) : T(0));
      });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](auto v) { return v > 0 ? v : decltype(v)(0); },
      [](auto v, auto) { return v > 0 ? decltype(v)(1) : decltype(v)(0); });
}

Tensor gelu(const Tensor& x) {
  return unary(
      "gelu", x,
      [](auto v) {
        using T = decltype(v);
        return T(0.5) * v * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
      },
      [](auto v, auto) {
        using T = decltype(v);
        const T cdf = T(0.5) * (T(1) + std::erf(v * T(std::numbers::sqrt2 / 2)));
        const T pdf = std::exp(T(-0.5) * v * v) * T(0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
        return cdf + v * pdf;
      });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](auto v) { return std::tanh(v); },
      [](auto, auto y) { return decltype(y)(1) - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](auto v) {
        using T = decltype(v);
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](auto, auto y) { return y * (decltype(y)(1) - y); });
}

Tensor clamp_min(const Tensor& x, double lo) {
  return unary(
      "clamp_min", x,
      [lo](auto v) {
        const auto l = static_cast<decltype(v)>(lo);
        return v < l ? l : v;
      },
      [lo](auto v, auto) {
        using T = decltype(v);
        return v < static_cast<T>(lo) ? T(0) : T(1);
      });
}

}  // namespace mvhmr::ops
