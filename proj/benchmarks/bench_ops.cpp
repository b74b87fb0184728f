#include <benchmark/benchmark.h>

#include "mvhmr/body/body_model.hpp"
#include "mvhmr/data/synth.hpp"
#include "mvhmr/tensor/ops.hpp"

using namespace mvhmr;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed) {
  data::Rng rng(seed);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = data::uniform(rng, -1, 1);
  return Tensor::from_vector(std::move(shape), v);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_tensor({n, n}, 1), b = random_tensor({n, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  Tensor x = random_tensor({8, 32, 32, c}, 3);
  Tensor w = random_tensor({3, 3, c, c}, 4);
  w.set_requires_grad(true);
  for (auto _ : state) {
    const Tensor loss = ops::sum_all(ops::conv2d(x, w, 1, 1));
    loss.backward();
    w.zero_grad();
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(64);

void BM_Softmax(benchmark::State& state) {
  const Tensor x = random_tensor({64, 256}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(ops::softmax(x));
}
BENCHMARK(BM_Softmax);

void BM_BodyForward(benchmark::State& state) {
  static const body::DiffBodyModel body(body::build_template(7));
  const auto B = static_cast<std::size_t>(state.range(0));
  const Tensor rot = ops::reshape(ops::rodrigues(random_tensor({B * 23, 3}, 6)),
                                  {static_cast<std::int64_t>(B), 23, 3, 3});
  const Tensor beta = random_tensor({B, 10}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(body.forward_canonical(rot, beta).joints);
}
BENCHMARK(BM_BodyForward)->Arg(1)->Arg(16);

}  // namespace
