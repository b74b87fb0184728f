#include <benchmark/benchmark.h>

#include "mvhmr/data/synth.hpp"
#include "mvhmr/net/network.hpp"

using namespace mvhmr;

namespace {

// Single-sample inference at N views, split like the overhead table.
void BM_NetworkForward(benchmark::State& state) {
  static const net::Network model(net::ModelConfig{});
  const auto n = static_cast<std::size_t>(state.range(0));
  data::Rng rng(11);
  std::vector<double> px(n * 64 * 64 * 3);
  for (auto& v : px) v = data::uniform01(rng);
  const Tensor images = Tensor::from_vector({1, n, 64, 64, 3}, px);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(images).beta);
  state.counters["views"] = static_cast<double>(n);
}
BENCHMARK(BM_NetworkForward)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_Head(benchmark::State& state) {
  static const net::Network model(net::ModelConfig{});
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto& cfg = model.config();
  const Tensor tokens = Tensor::full({1, n, cfg.tokens_per_view(), cfg.channels}, 0.1);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(model.head(tokens).beta);
}
BENCHMARK(BM_Head)->DenseRange(1, 8)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
