// Serial reference vs. OpenMP kernels for the forward render and the backward pass.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>

#include "dsbrdf/fixtures.hpp"
#include "dsbrdf/grad.hpp"
#include "dsbrdf/render.hpp"

namespace {

using namespace dsbrdf;

RenderScene sphere_scene(int resolution, int heightL) {
  return RenderScene{fixtures::sphere_normal_map(resolution), Camera::orthographic(resolution, resolution),
                     fixtures::studio_env(heightL, 2 * heightL), {fixtures::preset("glossy")}, std::nullopt};
}

RadianceImage random_upstream(const RenderScene& s) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RadianceImage up(s.normalMap.width(), s.normalMap.height());
  for (Rgb& p : up.pixels) {
    for (double& c : p) c = u(rng);
  }
  return up;
}

void BM_RenderSerial(benchmark::State& state) {
  const RenderScene s = sphere_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(render_serial(s));
}

void BM_RenderParallel(benchmark::State& state) {
  const RenderScene s = sphere_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(render(s));
  omp_set_num_threads(saved);
}

void BM_BackwardSerial(benchmark::State& state) {
  const RenderScene s = sphere_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const RadianceImage up = random_upstream(s);
  for (auto _ : state) benchmark::DoNotOptimize(backward_serial(s, up));
}

void BM_BackwardParallel(benchmark::State& state) {
  const RenderScene s = sphere_scene(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const RadianceImage up = random_upstream(s);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(state.range(2)));
  for (auto _ : state) benchmark::DoNotOptimize(backward(s, up));
  omp_set_num_threads(saved);
}

}  // namespace

BENCHMARK(BM_RenderSerial)->Args({32, 16})->Args({64, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderParallel)
    ->ArgsProduct({{32, 64}, {16, 32}, {1, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_BackwardSerial)->Args({32, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardParallel)->ArgsProduct({{32}, {16}, {1, 8}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
