#include <array>
#include <cmath>

#include "mvhmr/tensor/ops.hpp"
#include "op_util.hpp"

namespace mvhmr::ops {

using detail::cdata;
using detail::grad_data;
using detail::TensorImpl;
using detail::wdata;

namespace {

using V3 = std::array<double, 3>;

double dot(const V3& a, const V3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
V3 cross(const V3& a, const V3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Below this squared angle the series forms are used.
constexpr double kTaylorT = 1e-2;

// R = I + a(t) K + b(t) (w w^T - t I), t = |w|^2, plus da/dt and db/dt.
struct RodriguesCoeffs {
  double a, b, da, db;
};

RodriguesCoeffs rodrigues_coeffs(double t) {
  if (t < kTaylorT) {
    return {1.0 - t / 6.0 + t * t / 120.0 - t * t * t / 5040.0,
            0.5 - t / 24.0 + t * t / 720.0 - t * t * t / 40320.0,
            -1.0 / 6.0 + t / 60.0 - t * t / 1680.0 + t * t * t / 90720.0,
            -1.0 / 24.0 + t / 360.0 - t * t / 13440.0 + t * t * t / 907200.0};
  }
  const double th = std::sqrt(t);
  const double s = std::sin(th), c = std::cos(th);
  return {s / th, (1.0 - c) / t, (th * c - s) / (2.0 * t * th),
          (th * s - 2.0 * (1.0 - c)) / (2.0 * t * t)};
}

std::size_t leading_count(std::string_view op, const Tensor& x, std::size_t last) {
  if (x.dim() == 0 || x.shape().back() != last) {
    throw ShapeError(std::string(op) + ": expected trailing dimension " + std::to_string(last) +
                     ", got shape " + shape_str(x.shape()));
  }
  return x.numel() / last;
}

Shape rotmat_shape(const Tensor& x) {
  Shape s = x.shape();
  s.back() = 3;
  s.push_back(3);
  return s;
}

}  // namespace

Tensor rodrigues(const Tensor& axis_angle) {
  const std::size_t n = leading_count("rodrigues", axis_angle, 3);
  auto out = detail::make_impl(rotmat_shape(axis_angle), axis_angle.dtype());
  dispatch_dtype(axis_angle.dtype(), [&]<typename T>() {
    const T* pw = cdata<T>(axis_angle.impl());
    T* po = wdata<T>(*out);
    for (std::size_t s = 0; s < n; ++s) {
      const V3 w{pw[3 * s], pw[3 * s + 1], pw[3 * s + 2]};
      const double t = dot(w, w);
      const auto c = rodrigues_coeffs(t);
      const double K[3][3] = {{0, -w[2], w[1]}, {w[2], 0, -w[0]}, {-w[1], w[0], 0}};
      T* R = po + 9 * s;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double delta = i == j ? 1.0 : 0.0;
          R[3 * i + j] = static_cast<T>(delta + c.a * K[i][j] + c.b * (w[i] * w[j] - t * delta));
        }
      }
    }
  });
  return detail::finish(std::move(out), "rodrigues", {axis_angle},
                        [axis_angle, n](const TensorImpl&, const TensorImpl& g) {
                          dispatch_dtype(g.dtype, [&]<typename T>() {
                            const T* pw = cdata<T>(axis_angle.impl());
                            const T* pg = cdata<T>(g);
                            T* gw = grad_data<T>(axis_angle.impl());
                            for (std::size_t s = 0; s < n; ++s) {
                              const V3 w{pw[3 * s], pw[3 * s + 1], pw[3 * s + 2]};
                              const double t = dot(w, w);
                              const auto c = rodrigues_coeffs(t);
                              double G[3][3];
                              for (int i = 0; i < 9; ++i) G[i / 3][i % 3] = pg[9 * s + i];
                              const double K[3][3] = {{0, -w[2], w[1]}, {w[2], 0, -w[0]}, {-w[1], w[0], 0}};
                              double s_k = 0, s_w = 0;
                              for (int i = 0; i < 3; ++i) {
                                for (int j = 0; j < 3; ++j) {
                                  s_k += G[i][j] * K[i][j];
                                  s_w += G[i][j] * (w[i] * w[j] - (i == j ? t : 0.0));
                                }
                              }
                              const V3 vee{G[2][1] - G[1][2], G[0][2] - G[2][0], G[1][0] - G[0][1]};
                              const double tr = G[0][0] + G[1][1] + G[2][2];
                              for (int k = 0; k < 3; ++k) {
                                double sym = 0;
                                for (int j = 0; j < 3; ++j) sym += (G[k][j] + G[j][k]) * w[j];
                                const double d = 2.0 * w[k] * (c.da * s_k + c.db * s_w) + c.a * vee[k] +
                                                 c.b * sym - 2.0 * c.b * w[k] * tr;
                                gw[3 * s + k] += static_cast<T>(d);
                              }
                            }
                          });
                        });
}

namespace {

struct GsFrame {
  V3 a1, a2, b1, b2, b3;
  double n1 = 0, nu = 0;
  bool a1_degenerate = false, u_degenerate = false;
};

GsFrame gram_schmidt_frame(const V3& a1, const V3& a2) {
  GsFrame f;
  f.a1 = a1;
  f.a2 = a2;
  f.n1 = std::sqrt(dot(a1, a1));
  if (f.n1 < rotation6d_eps) {
    f.a1_degenerate = true;
    f.b1 = {1, 0, 0};
  } else {
    f.b1 = {a1[0] / f.n1, a1[1] / f.n1, a1[2] / f.n1};
  }
  const double p = dot(f.b1, a2);
  V3 u{a2[0] - p * f.b1[0], a2[1] - p * f.b1[1], a2[2] - p * f.b1[2]};
  f.nu = std::sqrt(dot(u, u));
  if (f.nu < rotation6d_eps) {
    // Orthogonalize the identity column least aligned with b1.
    f.u_degenerate = true;
    const V3 e = std::abs(f.b1[1]) < 0.9 ? V3{0, 1, 0} : V3{0, 0, 1};
    const double q = dot(f.b1, e);
    u = {e[0] - q * f.b1[0], e[1] - q * f.b1[1], e[2] - q * f.b1[2]};
    const double nu = std::sqrt(dot(u, u));
    f.b2 = {u[0] / nu, u[1] / nu, u[2] / nu};
  } else {
    f.b2 = {u[0] / f.nu, u[1] / f.nu, u[2] / f.nu};
  }
  f.b3 = cross(f.b1, f.b2);
  return f;
}

}  // namespace

// Fallback bases are treated as constants in backward.
Tensor gram_schmidt(const Tensor& six_d) {
  const std::size_t n = leading_count("gram_schmidt", six_d, 6);
  auto out = detail::make_impl(rotmat_shape(six_d), six_d.dtype());
  dispatch_dtype(six_d.dtype(), [&]<typename T>() {
    const T* px = cdata<T>(six_d.impl());
    T* po = wdata<T>(*out);
    for (std::size_t s = 0; s < n; ++s) {
      const T* x = px + 6 * s;
      const auto f = gram_schmidt_frame({x[0], x[1], x[2]}, {x[3], x[4], x[5]});
      T* R = po + 9 * s;
      for (int i = 0; i < 3; ++i) {
        R[3 * i + 0] = static_cast<T>(f.b1[i]);
        R[3 * i + 1] = static_cast<T>(f.b2[i]);
        R[3 * i + 2] = static_cast<T>(f.b3[i]);
      }
    }
  });
  return detail::finish(
      std::move(out), "gram_schmidt", {six_d}, [six_d, n](const TensorImpl&, const TensorImpl& g) {
        dispatch_dtype(g.dtype, [&]<typename T>() {
          const T* px = cdata<T>(six_d.impl());
          const T* pg = cdata<T>(g);
          T* gx = grad_data<T>(six_d.impl());
          for (std::size_t s = 0; s < n; ++s) {
            const T* x = px + 6 * s;
            const auto f = gram_schmidt_frame({x[0], x[1], x[2]}, {x[3], x[4], x[5]});
            const T* G = pg + 9 * s;
            V3 gb1{G[0], G[3], G[6]}, gb2{G[1], G[4], G[7]};
            const V3 gb3{G[2], G[5], G[8]};
            const V3 c1 = cross(f.b2, gb3), c2 = cross(gb3, f.b1);
            for (int i = 0; i < 3; ++i) {
              gb1[i] += c1[i];
              gb2[i] += c2[i];
            }
            if (!f.u_degenerate) {
              const double pb = dot(f.b2, gb2);
              V3 gu;
              for (int i = 0; i < 3; ++i) gu[i] = (gb2[i] - f.b2[i] * pb) / f.nu;
              const double b1gu = dot(f.b1, gu);
              const double b1a2 = dot(f.b1, f.a2);
              for (int i = 0; i < 3; ++i) {
                gx[6 * s + 3 + i] += static_cast<T>(gu[i] - f.b1[i] * b1gu);
                gb1[i] -= b1a2 * gu[i] + b1gu * f.a2[i];
              }
            }
            if (!f.a1_degenerate) {
              const double pb = dot(f.b1, gb1);
              for (int i = 0; i < 3; ++i) {
                gx[6 * s + i] += static_cast<T>((gb1[i] - f.b1[i] * pb) / f.n1);
              }
            }
          }
        });
      });
}

}  // namespace mvhmr::ops
