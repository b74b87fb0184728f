#include "mvhmr/train/gradcheck_suite.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include "../tensor/op_util.hpp"
#include "mvhmr/body/body_model.hpp"
#include "mvhmr/camera/camera.hpp"
#include "mvhmr/data/synth.hpp"
#include "mvhmr/eval/losses.hpp"
#include "mvhmr/net/discriminator.hpp"
#include "mvhmr/net/network.hpp"
#include "mvhmr/tensor/ops.hpp"
#include "mvhmr/train/trainer.hpp"

namespace mvhmr::train {

namespace {

using data::Rng;

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = data::uniform(rng, lo, hi);
  return v;
}

Tensor rand(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  const std::size_t n = shape_numel(shape);
  return Tensor::from_vector(std::move(shape), uniform_values(rng, n, lo, hi), Dtype::f64);
}

// Magnitudes in [0.2, 1.2] with random sign: keeps kinked ops off their kink.
Tensor rand_away_from_zero(Rng& rng, Shape shape) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> v(n);
  for (auto& x : v) x = (data::uniform01(rng) < 0.5 ? -1.0 : 1.0) * data::uniform(rng, 0.2, 1.2);
  return Tensor::from_vector(std::move(shape), v, Dtype::f64);
}

// Fixed random projection of any output to a scalar; reproducible per call.
Tensor project_scalar(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  return ops::sum_all(ops::mul(y, Tensor::from_vector(y.shape(), uniform_values(rng, y.numel(), -1, 1), y.dtype())));
}

using Fn = std::function<Tensor(std::span<const Tensor>)>;
using Inputs = std::function<std::vector<Tensor>(Rng&)>;

GradCheckCase make_case(std::string name, std::string category, Inputs inputs, Fn f, double tol = kOpTolerance,
                        std::size_t max_probes = 0) {
  auto run = [inputs, f, tol, max_probes](std::uint64_t seed) {
    Rng rng(data::splitmix64(seed));
    const std::vector<Tensor> xs = inputs(rng);
    const std::uint64_t proj_seed = data::splitmix64(seed + 17);
    GradCheckOptions o;
    o.tol = tol;
    o.max_probes = max_probes;
    o.seed = seed;
    return grad_check([&](std::span<const Tensor> in) { return project_scalar(f(in), proj_seed); }, xs, o);
  };
  return {std::move(name), std::move(category), run};
}

GradCheckCase unary(std::string name, Tensor (*op)(const Tensor&), bool away_from_zero = false, double lo = -1.5,
                    double hi = 1.5) {
  return make_case(
      "op." + name, "op",
      [=](Rng& r) { return std::vector<Tensor>{away_from_zero ? rand_away_from_zero(r, {3, 4}) : rand(r, {3, 4}, lo, hi)}; },
      [op](std::span<const Tensor> in) { return op(in[0]); });
}

void add_op_cases(std::vector<GradCheckCase>& c) {
  auto two = [](Shape a, Shape b, double lo = -1, double hi = 1) {
    return [=](Rng& r) { return std::vector<Tensor>{rand(r, a, lo, hi), rand(r, b, lo, hi)}; };
  };
  c.push_back(make_case("op.add", "op", two({3, 4}, {3, 4}), [](auto in) { return ops::add(in[0], in[1]); }));
  c.push_back(make_case("op.add_broadcast", "op", two({2, 3, 4}, {4}), [](auto in) { return ops::add(in[0], in[1]); }));
  c.push_back(make_case("op.sub", "op", two({3, 4}, {3, 1}), [](auto in) { return ops::sub(in[0], in[1]); }));
  c.push_back(make_case("op.mul", "op", two({3, 4}, {1, 4}), [](auto in) { return ops::mul(in[0], in[1]); }));
  c.push_back(make_case("op.div", "op",
                        [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4}), rand_away_from_zero(r, {3, 4})}; },
                        [](auto in) { return ops::div(in[0], in[1]); }));
  c.push_back(make_case("op.add_scalar", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {5})}; },
                        [](auto in) { return ops::add_scalar(in[0], 0.7); }));
  c.push_back(make_case("op.mul_scalar", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {5})}; },
                        [](auto in) { return ops::mul_scalar(in[0], -1.3); }));
  c.push_back(unary("neg", ops::neg));
  c.push_back(unary("exp", ops::exp));
  c.push_back(unary("log", ops::log, false, 0.3, 2.0));
  c.push_back(unary("sqrt", ops::sqrt, false, 0.3, 2.0));
  c.push_back(unary("square", ops::square));
  c.push_back(unary("abs", ops::abs, true));
  c.push_back(unary("relu", ops::relu, true));
  c.push_back(unary("gelu", ops::gelu));
  c.push_back(unary("tanh", ops::tanh));
  c.push_back(unary("sigmoid", ops::sigmoid));
  c.push_back(make_case("op.clamp_min", "op", [](Rng& r) { return std::vector<Tensor>{rand_away_from_zero(r, {3, 4})}; },
                        [](auto in) { return ops::clamp_min(in[0], 0.0); }));
  c.push_back(make_case("op.matmul", "op", two({3, 4}, {4, 5}), [](auto in) { return ops::matmul(in[0], in[1]); }));
  c.push_back(make_case("op.matmul_batched", "op", two({2, 3, 4}, {4, 2}), [](auto in) { return ops::matmul(in[0], in[1]); }));
  c.push_back(make_case("op.bmm", "op", two({2, 3, 4}, {2, 4, 3}), [](auto in) { return ops::bmm(in[0], in[1]); }));
  c.push_back(make_case("op.transpose", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 3, 4})}; },
                        [](auto in) { return ops::transpose(in[0], 0, 2); }));
  c.push_back(make_case("op.permute", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 3, 4})}; },
                        [](auto in) { return ops::permute(in[0], {1, 2, 0}); }));
  c.push_back(make_case("op.reshape", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 6})}; },
                        [](auto in) { return ops::reshape(in[0], {3, -1}); }));
  c.push_back(make_case("op.concat", "op", two({2, 3}, {2, 2}),
                        [](auto in) { return ops::concat({in[0], in[1]}, 1); }));
  c.push_back(make_case("op.slice", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {4, 5})}; },
                        [](auto in) { return ops::slice(in[0], 1, 1, 4); }));
  c.push_back(make_case("op.sum", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4, 2})}; },
                        [](auto in) { return ops::sum(in[0], 1); }));
  c.push_back(make_case("op.mean", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4, 2})}; },
                        [](auto in) { return ops::mean(in[0], -1, true); }));
  c.push_back(make_case("op.max", "op",
                        [](Rng& r) {
                          // Values on a 0.1 grid, shuffled, so maxima are isolated.
                          std::vector<double> v(12);
                          for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 0.5;
                          for (std::size_t i = v.size(); i > 1; --i) {
                            std::swap(v[i - 1], v[static_cast<std::size_t>(data::uniform01(r) * static_cast<double>(i))]);
                          }
                          return std::vector<Tensor>{Tensor::from_vector({3, 4}, v, Dtype::f64)};
                        },
                        [](auto in) { return ops::max(in[0], 1); }));
  c.push_back(make_case("op.sum_all", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4})}; },
                        [](auto in) { return ops::sum_all(in[0]); }));
  c.push_back(make_case("op.mean_all", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4})}; },
                        [](auto in) { return ops::mean_all(in[0]); }));
  c.push_back(make_case("op.softmax", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 5}, -2, 2)}; },
                        [](auto in) { return ops::softmax(in[0]); }));
  c.push_back(make_case("op.layer_norm", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 6}, -2, 2)}; },
                        [](auto in) { return ops::layer_norm(in[0]); }));
  c.push_back(make_case("op.conv2d", "op", two({2, 5, 5, 3}, {3, 3, 3, 4}),
                        [](auto in) { return ops::conv2d(in[0], in[1], 2, 1); }));
  c.push_back(make_case("op.embedding", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {5, 3})}; },
                        [](auto in) {
                          const std::int64_t idx[] = {4, 0, 4, 2};
                          return ops::embedding(in[0], idx);
                        }));
  c.push_back(make_case("op.rodrigues", "op",
                        [](Rng& r) {
                          Tensor w = rand(r, {4, 3}, -1.5, 1.5);
                          // One near-zero rotation exercises the series branch.
                          for (std::size_t i = 0; i < 3; ++i) w.set_value(i, 1e-3 * w.value(i));
                          return std::vector<Tensor>{w};
                        },
                        [](auto in) { return ops::rodrigues(in[0]); }));
  c.push_back(make_case("op.gram_schmidt", "op", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 6})}; },
                        [](auto in) { return ops::gram_schmidt(in[0]); }));
}

const body::BodyModelParams& small_body() {
  static const body::BodyModelParams model = body::build_template(3, body::kMinVertexCount);
  return model;
}

void add_body_camera_cases(std::vector<GradCheckCase>& c) {
  c.push_back(make_case(
      "body.forward", "body",
      [](Rng& r) { return std::vector<Tensor>{rand(r, {1, 24, 3}, -0.6, 0.6), rand(r, {1, 10})}; },
      [](auto in) {
        static const body::DiffBodyModel body(small_body());
        const Tensor rot = ops::reshape(ops::rodrigues(ops::reshape(in[0], {-1, 3})), {1, 24, 3, 3});
        const auto out = body.forward(rot, in[1]);
        return ops::concat({ops::reshape(out.vertices, {-1}), ops::reshape(out.joints, {-1})}, 0);
      },
      kOpTolerance, 24));
  c.push_back(make_case(
      "body.forward_canonical", "body",
      [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 23, 3, 3}), rand(r, {2, 10})}; },
      [](auto in) {
        static const body::DiffBodyModel body(small_body());
        return body.forward_canonical(in[0], in[1]).joints;
      },
      kOpTolerance, 24));
  c.push_back(make_case(
      "camera.to_camera", "camera",
      [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 5, 3}), rand(r, {2, 3}, -2, 2), rand(r, {2, 3})}; },
      [](auto in) {
        const Tensor rot = ops::rodrigues(in[1]);
        return camera::to_camera(in[0], rot, in[2]);
      }));
  c.push_back(make_case(
      "camera.project", "camera",
      [](Rng& r) {
        Tensor p = rand(r, {2, 5, 3});
        for (std::size_t i = 2; i < p.numel(); i += 3) p.set_value(i, 2.0 + p.value(i));
        return std::vector<Tensor>{p};
      },
      [](auto in) { return camera::project(in[0], camera::Intrinsics{}, false).uv; }));
  c.push_back(make_case("camera.normalize_pixels", "camera",
                        [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 5, 2}, 0, 64)}; },
                        [](auto in) { return camera::normalize_pixels(in[0], camera::Intrinsics{}); }));
}

void add_loss_cases(std::vector<GradCheckCase>& c) {
  c.push_back(make_case(
      "loss.smpl", "loss",
      [](Rng& r) {
        return std::vector<Tensor>{rand(r, {2, 23, 3, 3}), rand(r, {2, 10}), rand(r, {2, 23, 3}, -1, 1),
                                   rand(r, {2, 10})};
      },
      [](auto in) { return eval::smpl_loss(in[0], in[1], in[2], in[3]); }));
  c.push_back(make_case(
      "loss.keypoint3d", "loss",
      [](Rng& r) {
        const Tensor gt = rand(r, {2, 3, 24, 3});
        return std::vector<Tensor>{gt + rand_away_from_zero(r, {2, 3, 24, 3}), gt};
      },
      [](auto in) { return eval::keypoint3d_loss(in[0], in[1]); }));
  c.push_back(make_case(
      "loss.keypoint2d", "loss",
      [](Rng& r) {
        const Tensor gt = rand(r, {2, 3, 24, 2});
        return std::vector<Tensor>{gt + rand_away_from_zero(r, {2, 3, 24, 2}), gt};
      },
      [](auto in) { return eval::keypoint2d_loss(in[0], in[1]); }));
  c.push_back(make_case("loss.adversarial_gen", "loss",
                        [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 25}), rand(r, {2, 25})}; },
                        [](auto in) { return eval::adversarial_losses(in[0], in[1]).gen; }));
  c.push_back(make_case("loss.adversarial_disc", "loss",
                        [](Rng& r) { return std::vector<Tensor>{rand(r, {2, 25}), rand(r, {2, 25})}; },
                        [](auto in) { return eval::adversarial_losses(in[0], in[1]).disc; }));
}

net::ModelConfig tiny_model(net::Variant v) {
  net::ModelConfig m;
  m.variant = v;
  m.image_size = 16;
  m.in_channels = 3;
  m.channels = 16;
  m.stage_widths = {8, 16};
  m.stage_extra = {0, 1};
  m.depth = 1;
  m.heads = 2;
  m.mlp_ratio = 2;
  m.head_hidden = 16;
  m.score_hidden = 8;
  m.max_views = 4;
  m.train_views = 2;
  m.seed = 5;
  return m;
}

// Image -> prediction -> weighted loss, differentiated w.r.t. every network
// parameter. Parameters are jittered so zero-initialized layers carry signal.
GradCheckCase end_to_end_case(net::Variant v) {
  auto run = [v](std::uint64_t seed) {
    Rng rng(data::splitmix64(seed));
    const net::ModelConfig cfg = tiny_model(v);
    auto model = std::make_shared<net::Network>(cfg, Dtype::f64);
    auto disc = std::make_shared<net::Discriminator>(seed + 3, Dtype::f64);
    const net::ParamList params = model->parameters();
    std::vector<Tensor> xs;
    for (const auto& p : params) {
      Tensor t = p.tensor->detach();
      for (std::size_t i = 0; i < t.numel(); ++i) t.set_value(i, t.value(i) + data::uniform(rng, -0.05, 0.05));
      xs.push_back(t);
    }
    static const body::DiffBodyModel body(small_body());
    const std::size_t B = 2, N = cfg.train_views;
    Batch batch;
    batch.views = N;
    batch.images = rand(rng, {B, N, 16, 16, 3}, 0, 1);
    batch.gt_theta = rand(rng, {B, 23, 3}, -0.3, 0.3);
    batch.gt_beta = rand(rng, {B, 10});
    Tensor j3d = rand(rng, {B, N, 24, 3}, -0.5, 0.5);
    for (std::size_t i = 2; i < j3d.numel(); i += 3) j3d.set_value(i, j3d.value(i) + 3.0);
    batch.j3d = j3d;
    batch.j2d = rand(rng, {B, N, 24, 2}, -0.8, 0.8);
    camera::Intrinsics K;
    K.cx = K.cy = 8;
    K.height = K.width = 16;

    auto f = [=](std::span<const Tensor> in) {
      const Dtype dt = in[0].dtype();
      for (std::size_t k = 0; k < params.size(); ++k) *params[k].tensor = in[k];
      Batch b = batch;
      b.images = batch.images.to(dt);
      b.gt_theta = batch.gt_theta.to(dt);
      b.gt_beta = batch.gt_beta.to(dt);
      b.j3d = batch.j3d.to(dt);
      b.j2d = batch.j2d.to(dt);
      const net::Prediction pred = model->forward(b.images);
      return generator_loss(pred, b, body, disc.get(), eval::LossWeights{}, K).total;
    };
    GradCheckOptions o;
    o.tol = kEndToEndTolerance;
    o.max_probes = 3;
    o.seed = seed;
    return grad_check(f, xs, o);
  };
  return {std::string("end_to_end.variant_") + net::variant_char(v), "end_to_end", run};
}

}  // namespace

Tensor corrupted_square(const Tensor& x) {
  auto out = detail::make_impl(x.shape(), x.dtype());
  dispatch_dtype(x.dtype(), [&]<typename T>() {
    const T* src = detail::cdata<T>(x.impl());
    T* dst = detail::wdata<T>(*out);
    for (std::size_t i = 0; i < x.numel(); ++i) dst[i] = src[i] * src[i];
  });
  auto xi = x.impl_ptr();
  return detail::finish(out, "corrupted_square", {x}, [xi](const detail::TensorImpl&, const detail::TensorImpl& g) {
    dispatch_dtype(xi->dtype, [&]<typename T>() {
      T* gx = detail::grad_data<T>(*xi);
      const T* gv = detail::cdata<T>(g);
      const T* xv = detail::cdata<T>(*xi);
      for (std::size_t i = 0; i < xi->numel(); ++i) gx[i] += T(3) * xv[i] * gv[i];
    });
  });
}

GradCheckCase negative_control_case() {
  return make_case("control.corrupted_square", "control", [](Rng& r) { return std::vector<Tensor>{rand(r, {3, 4})}; },
                   [](auto in) { return corrupted_square(in[0]); });
}

const std::vector<GradCheckCase>& gradcheck_registry() {
  static const std::vector<GradCheckCase> cases = [] {
    std::vector<GradCheckCase> c;
    add_op_cases(c);
    add_body_camera_cases(c);
    add_loss_cases(c);
    for (auto v : {net::Variant::a, net::Variant::b, net::Variant::c, net::Variant::d}) c.push_back(end_to_end_case(v));
    return c;
  }();
  return cases;
}

bool SuiteReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed(); });
}

std::vector<std::string> SuiteReport::failures() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (!e.passed()) out.push_back(e.name);
  }
  return out;
}

SuiteReport run_gradcheck_suite(const std::vector<GradCheckCase>& cases, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport r;
  for (const auto& c : cases) {
    SuiteEntry e{c.name, c.category, {}, {}};
    try {
      e.report = c.run(seed);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    r.entries.push_back(std::move(e));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void write_suite_report(std::ostream& out, const SuiteReport& report) {
  char buf[256];
  for (const auto& e : report.entries) {
    if (!e.error.empty()) {
      out << e.name << " ERROR " << e.error << '\n';
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%-28s %s max_rel_err=%.3e tol=%.0e probes=%zu", e.name.c_str(),
                  e.report.passed ? "PASS" : "FAIL", e.report.max_rel_error, e.report.tol, e.report.probes);
    out << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%zu checks, %zu failed, %.1f s", report.entries.size(), report.failures().size(),
                report.seconds);
  out << buf << '\n';
}

}  // namespace mvhmr::train
