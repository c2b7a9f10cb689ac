#include <benchmark/benchmark.h>

#include "tlsr/degradation.hpp"
#include "tlsr/metrics.hpp"

using namespace tlsr;
using namespace tlsr::degradation;

namespace {

imaging::Image random_image(int h, int w) {
  Rng rng(1);
  imaging::Image img(h, w, 3);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

void BM_TransitionKernel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(transition_kernel(0.2, 2.0, 0.37, 21));
}
BENCHMARK(BM_TransitionKernel);

void BM_Blur(benchmark::State& state) {
  const auto img = random_image(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  const auto k = gaussian_kernel(2.0, 21);
  for (auto _ : state) benchmark::DoNotOptimize(blur(img, k));
}
BENCHMARK(BM_Blur)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DegradeX4(benchmark::State& state) {
  const auto img = random_image(128, 128);
  const auto spec = default_setup(Family::Convolutive, 4).at(2.0);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(degrade(img, spec, rng));
}
BENCHMARK(BM_DegradeX4)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const auto a = imaging::rgb_to_luminance(random_image(128, 128));
  const auto b = imaging::rgb_to_luminance(random_image(128, 128));
  for (auto _ : state) benchmark::DoNotOptimize(imaging::ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
