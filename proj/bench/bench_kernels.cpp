// Serial reference vs OpenMP kernels. The second argument of every benchmark
// selects the execution: 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <vector>

#include "latentface/generator.hpp"
#include "latentface/kernels.hpp"
#include "latentface/pca.hpp"
#include "latentface/rng.hpp"

using namespace latentface;
using namespace latentface::kernels;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Execution::serial : Execution::parallel; }

std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double scale = 1.0, double offset = 0.0) {
  GaussianStream stream(seed);
  std::vector<double> out(n);
  for (double& v : out) {
    v = offset + scale * stream.next();
  }
  return out;
}

// A 32x32 vertex grid spread over the image, like a frontal face render.
struct SplatScene {
  SplatParams params;
  std::vector<double> screen;
  std::vector<double> colors;
  std::vector<double> image;
  std::vector<double> denominator;
  std::vector<double> grad_image;
  std::vector<double> grad_screen;
  std::vector<double> grad_colors;

  explicit SplatScene(int size) {
    params.size = size;
    const int side = 32;
    const std::vector<double> jitter = gaussian(2 * side * side, 1, 0.3);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        const std::size_t v = static_cast<std::size_t>(r * side + c);
        screen.push_back((c + 0.5) * size / side + jitter[2 * v]);
        screen.push_back((r + 0.5) * size / side + jitter[2 * v + 1]);
      }
    }
    colors = gaussian(3 * side * side, 2, 0.1, 0.5);
    const std::size_t pixels = static_cast<std::size_t>(size) * size;
    image.resize(3 * pixels);
    denominator.resize(pixels);
    grad_image = gaussian(3 * pixels, 3);
    grad_screen.resize(screen.size());
    grad_colors.resize(colors.size());
    splat_forward(Execution::serial, params, screen, colors, image, denominator);
  }
};

void BM_SplatForward(benchmark::State& state) {
  SplatScene scene(static_cast<int>(state.range(0)));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    splat_forward(exec, scene.params, scene.screen, scene.colors, scene.image, scene.denominator);
    benchmark::DoNotOptimize(scene.image.data());
  }
}

void BM_SplatBackward(benchmark::State& state) {
  SplatScene scene(static_cast<int>(state.range(0)));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    splat_backward(exec, scene.params, scene.screen, scene.colors, scene.image, scene.denominator, scene.grad_image,
                   scene.grad_screen, scene.grad_colors);
    benchmark::DoNotOptimize(scene.grad_screen.data());
  }
}

void BM_Matvec(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::vector<double> a = gaussian(static_cast<std::size_t>(n) * n, 4);
  const std::vector<double> x = gaussian(static_cast<std::size_t>(n), 5);
  std::vector<double> y(static_cast<std::size_t>(n));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    matvec(exec, n, n, a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_MatvecTransposed(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::vector<double> a = gaussian(static_cast<std::size_t>(n) * n, 6);
  const std::vector<double> x = gaussian(static_cast<std::size_t>(n), 7);
  std::vector<double> y(static_cast<std::size_t>(n));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    matvec_transposed(exec, n, n, a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
}

void BM_CollectSamples(benchmark::State& state) {
  const ReferenceGenerator generator{ReferenceGeneratorConfig{}};
  const int n = static_cast<int>(state.range(0));
  const Execution exec = exec_of(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(collect_samples(generator, n, "dense", 0, 1.0, exec));
  }
}

} // namespace

BENCHMARK(BM_SplatForward)->ArgsProduct({{64, 224}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SplatBackward)->ArgsProduct({{64, 224}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Matvec)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatvecTransposed)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CollectSamples)->ArgsProduct({{1000, 10000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
