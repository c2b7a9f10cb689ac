#include <benchmark/benchmark.h>

#include "tlsr/nn/ops.hpp"
#include "tlsr/rng.hpp"

using namespace tlsr;
using namespace tlsr::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), hw = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({8, c, hw, hw}, 1);
  const Tensor w = random_tensor({c, c, 3, 3}, 2);
  const Tensor b = random_tensor({c, 1, 1, 1}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, &b, Padding::Zero, 1));
  state.counters["FLOPs"] = benchmark::Counter(2.0 * 8 * c * c * 9 * hw * hw, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv2dForward)->Args({16, 32})->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0)), hw = static_cast<int>(state.range(1));
  const Tensor x = random_tensor({8, c, hw, hw}, 1);
  const Tensor w = random_tensor({c, c, 3, 3}, 2);
  const Tensor gy = random_tensor({8, c, hw, hw}, 3);
  Tensor gx, gw(w.shape), gb({c, 1, 1, 1});
  for (auto _ : state) {
    conv2d_backward(x, w, gy, Padding::Zero, 1, &gx, &gw, &gb);
    benchmark::DoNotOptimize(gx.data.data());
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({16, 32})->Args({16, 64})->Unit(benchmark::kMillisecond);

void BM_ReflectConv(benchmark::State& state) {
  const Tensor x = random_tensor({1, 3, 96, 96}, 1);
  const Tensor w = random_tensor({16, 3, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, w, nullptr, Padding::Reflect, 1));
}
BENCHMARK(BM_ReflectConv)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
