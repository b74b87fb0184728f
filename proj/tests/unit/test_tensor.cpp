#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <tuple>

#include "mvhmr/tensor/grad_check.hpp"
#include "mvhmr/tensor/graph.hpp"
#include "mvhmr/tensor/ops.hpp"
#include "mvhmr/train/gradcheck_suite.hpp"

using namespace mvhmr;

namespace {

void expect_values(const Tensor& t, std::initializer_list<double> want, double tol = 1e-12) {
  const auto got = t.to_vector();
  ASSERT_EQ(got.size(), want.size());
  std::size_t i = 0;
  for (double w : want) EXPECT_NEAR(got[i++], w, tol) << "index " << i - 1;
}

}  // namespace

TEST(Tensor, MatmulByIdentityIsUnchanged) {
  const Tensor a = Tensor::from_vector({2, 2}, {1, 2, 3, 4}, Dtype::f64);
  const Tensor eye = Tensor::from_vector({2, 2}, {1, 0, 0, 1}, Dtype::f64);
  expect_values(ops::matmul(a, eye), {1, 2, 3, 4});
}

TEST(Tensor, SoftmaxOfEqualLogitsIsUniform) {
  expect_values(ops::softmax(Tensor::zeros({3}, Dtype::f64)), {1.0 / 3, 1.0 / 3, 1.0 / 3});
}

TEST(Tensor, LayerNormOfConstantIsZero) {
  expect_values(ops::layer_norm(Tensor::full({4}, 2.5, Dtype::f64)), {0, 0, 0, 0});
}

// Direct-loop reference: x [N, H, W, Cin], w [k, k, Cin, Cout], zero padding.
TEST(Tensor, Conv2dMatchesDirectLoop) {
  for (const auto [stride, pad, k] : {std::tuple{1, 1, 3}, std::tuple{2, 1, 3}, std::tuple{1, 0, 1}, std::tuple{2, 0, 3}}) {
    const std::size_t N = 2, H = 7, W = 6, Ci = 3, Co = 4;
    std::vector<double> xv(N * H * W * Ci), wv(k * k * Ci * Co);
    for (std::size_t i = 0; i < xv.size(); ++i) xv[i] = std::sin(0.7 * static_cast<double>(i) + 0.3);
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = std::cos(1.3 * static_cast<double>(i));
    const Tensor x = Tensor::from_vector({N, H, W, Ci}, xv, Dtype::f64);
    const Tensor w = Tensor::from_vector({static_cast<std::size_t>(k), static_cast<std::size_t>(k), Ci, Co}, wv, Dtype::f64);
    const Tensor y = ops::conv2d(x, w, stride, pad);
    const std::size_t Ho = (H + 2 * pad - k) / stride + 1, Wo = (W + 2 * pad - k) / stride + 1;
    ASSERT_EQ(y.shape(), (Shape{N, Ho, Wo, Co}));
    const auto got = y.to_vector();
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox)
          for (std::size_t co = 0; co < Co; ++co) {
            double want = 0;
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(oy * stride) - pad + ky, ix = static_cast<long>(ox * stride) - pad + kx;
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W)) continue;
                for (std::size_t ci = 0; ci < Ci; ++ci)
                  want += xv[((n * H + iy) * W + ix) * Ci + ci] * wv[((ky * k + kx) * Ci + ci) * Co + co];
              }
            EXPECT_NEAR(got[((n * Ho + oy) * Wo + ox) * Co + co], want, 1e-12)
                << "stride " << stride << " pad " << pad << " at " << n << "," << oy << "," << ox << "," << co;
          }
  }
}

TEST(Tensor, BackwardOfSumIsOnes) {
  Tensor x = Tensor::from_vector({3}, {4, 5, 6}, Dtype::f64);
  x.set_requires_grad(true);
  ops::sum_all(x).backward();
  expect_values(x.grad(), {1, 1, 1});
}

TEST(Tensor, BackwardOfSquaredSum) {
  Tensor x = Tensor::from_vector({3}, {1, 2, 3}, Dtype::f64);
  x.set_requires_grad(true);
  ops::sum_all(x * x).backward();
  expect_values(x.grad(), {2, 4, 6});
}

TEST(Tensor, GradientsAccumulateOverReuse) {
  Tensor x = Tensor::from_vector({2}, {1.5, -2}, Dtype::f64);
  x.set_requires_grad(true);
  const Tensor y = x * 3.0;
  ops::sum_all(y + y * y).backward();  // d/dx (3x + 9x^2) = 3 + 18x
  expect_values(x.grad(), {3 + 18 * 1.5, 3 - 36});
}

TEST(Tensor, NonScalarBackwardThrows) {
  Tensor x = Tensor::ones({2}, Dtype::f64);
  x.set_requires_grad(true);
  EXPECT_THROW((x * 2.0).backward(), ShapeError);
}

TEST(Tensor, ShapeErrorNamesOpAndShapes) {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({4, 5});
  try {
    (void)ops::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(2, 3)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(4, 5)"), std::string::npos) << msg;
  }
  EXPECT_THROW((void)ops::add(Tensor::zeros({2, 3}), Tensor::zeros({2})), ShapeError);
}

TEST(Tensor, DomainErrors) {
  EXPECT_THROW((void)ops::log(Tensor::from_vector({2}, {1, -1})), std::domain_error);
  EXPECT_THROW((void)ops::sqrt(Tensor::from_vector({1}, {-0.5})), std::domain_error);
}

TEST(Tensor, NoGradGuardSkipsRecording) {
  Tensor x = Tensor::ones({2}, Dtype::f64);
  x.set_requires_grad(true);
  NoGradGuard guard;
  EXPECT_FALSE((x * 2.0).requires_grad());
}

TEST(Graph, TraceIsTopologicalAndVisitsOnce) {
  Tensor x = Tensor::from_vector({2}, {1, 2}, Dtype::f64);
  x.set_requires_grad(true);
  const Tensor y = ops::exp(x);
  const Tensor loss = ops::sum_all(y * y + y);
  const Graph g = trace(loss);
  EXPECT_NO_THROW(g.validate());
  std::size_t leaves = 0, exps = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (auto in : g.nodes[i].inputs) EXPECT_LT(in, i);
    leaves += g.nodes[i].op == "leaf";
    exps += g.nodes[i].op == "exp";
  }
  EXPECT_EQ(leaves, 1u);
  EXPECT_EQ(exps, 1u);
  EXPECT_EQ(g.nodes.back().output.impl_ptr(), loss.impl_ptr());
}

TEST(Tensor, Float32MatchesFloat64) {
  const Tensor a = Tensor::from_vector({2, 3}, {0.1, -0.2, 0.3, 0.4, 0.5, -0.6}, Dtype::f32);
  const Tensor b = Tensor::from_vector({3, 2}, {1, 2, 3, 4, 5, 6}, Dtype::f32);
  const auto f32 = ops::softmax(ops::matmul(a, b)).to_vector();
  const auto f64 = ops::softmax(ops::matmul(a.to(Dtype::f64), b.to(Dtype::f64))).to_vector();
  for (std::size_t i = 0; i < f32.size(); ++i) EXPECT_NEAR(f32[i], f64[i], 1e-6);
}

// Every registered op passes the finite-difference check for 20 seeds.
TEST(GradCheck, OpsOverTwentySeeds) {
  std::vector<train::GradCheckCase> ops_only;
  for (const auto& c : train::gradcheck_registry()) {
    if (c.category == "op") ops_only.push_back(c);
  }
  ASSERT_GE(ops_only.size(), 24u);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = train::run_gradcheck_suite(ops_only, seed);
    for (const auto& e : r.entries) {
      EXPECT_TRUE(e.passed()) << e.name << " seed " << seed << " err " << e.report.max_rel_error << " " << e.error;
    }
  }
}

TEST(GradCheck, RegistryNamesAreUniqueAndCoverRequiredOps) {
  std::set<std::string> names;
  for (const auto& c : train::gradcheck_registry()) EXPECT_TRUE(names.insert(c.name).second) << c.name;
  for (const char* op : {"add", "sub", "mul", "div", "matmul", "transpose", "reshape", "concat", "slice", "sum",
                         "mean", "max", "exp", "log", "sqrt", "relu", "gelu", "tanh", "sigmoid", "softmax",
                         "layer_norm", "conv2d", "embedding", "bmm"}) {
    EXPECT_TRUE(names.count(std::string("op.") + op)) << op;
  }
}

TEST(GradCheck, CorruptedBackwardIsNamedFailure) {
  const auto r = train::run_gradcheck_suite({train::negative_control_case()}, 0);
  ASSERT_EQ(r.failures().size(), 1u);
  EXPECT_EQ(r.failures()[0], "control.corrupted_square");
  EXPECT_GT(r.entries[0].report.max_rel_error, 0.1);
}

TEST(GradCheck, Float32AgainstFloat64Reference) {
  Tensor x = Tensor::from_vector({2, 3}, {0.3, -0.7, 1.1, 0.2, -0.4, 0.9}, Dtype::f32);
  const auto r = grad_check([](const Tensor& t) { return ops::sum_all(ops::tanh(t) * t); }, x, 1e-5, 1e-3);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}
