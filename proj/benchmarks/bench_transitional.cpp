#include <benchmark/benchmark.h>

#include <vector>

#include "tlsr/transitional.hpp"

using namespace tlsr;
using namespace tlsr::transitional;

namespace {

// Grouped batch convolution against looping over samples with exported weights.
void BM_TransitionalGrouped(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  Rng rng(1);
  TransitionalConv2d conv("t", 16, 16, 3, rng);
  nn::Tensor x({B, 16, 32, 32});
  for (auto& v : x.data) v = rng.uniform();
  std::vector<double> taus(B);
  for (auto& t : taus) t = rng.uniform();
  conv.set_taus(taus);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_TransitionalGrouped)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_TransitionalPerSample(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  Rng rng(1);
  TransitionalConv2d conv("t", 16, 16, 3, rng);
  nn::Tensor xb({1, 16, 32, 32});
  for (auto& v : xb.data) v = rng.uniform();
  std::vector<double> taus(B);
  for (auto& t : taus) t = rng.uniform();
  for (auto _ : state)
    for (int b = 0; b < B; ++b) {
      const auto p = conv.at(taus[b]);
      benchmark::DoNotOptimize(nn::conv2d(xb, p.weight, &p.bias, nn::Padding::Zero, 1));
    }
}
BENCHMARK(BM_TransitionalPerSample)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_StackForwardBackward(benchmark::State& state) {
  Rng rng(2);
  TransitionalStack stack("s", 2, 16, rng);
  nn::Tensor x({8, 16, 32, 32});
  for (auto& v : x.data) v = rng.uniform();
  std::vector<double> taus(8, 0.5);
  const nn::Tensor g(x.shape, 1e-3);
  for (auto _ : state) {
    transitional_forward(stack, x, taus);
    benchmark::DoNotOptimize(stack.backward(g));
  }
}
BENCHMARK(BM_StackForwardBackward)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
