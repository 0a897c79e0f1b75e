// Blocked/OpenMP conv kernels against the serial reference loops, at the
// layer shapes the desk-scale and full-resolution models actually run.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "layoutgen/numerics/kernels.hpp"

namespace {

using layoutgen::num::kernels::ConvGeometry;
namespace kernels = layoutgen::num::kernels;

std::vector<float> random_values(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Args: batch, in_channels, size, out_channels, stride.
ConvGeometry geometry(const benchmark::State& state) {
  return ConvGeometry{static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                      static_cast<int>(state.range(2)), static_cast<int>(state.range(2)),
                      static_cast<int>(state.range(3)), 3, static_cast<int>(state.range(4)), 1};
}

struct Buffers {
  std::vector<float> input, weight, output;
  explicit Buffers(const ConvGeometry& g)
      : input(random_values(static_cast<std::size_t>(g.batch) * g.in_channels * g.height * g.width, 1)),
        weight(random_values(static_cast<std::size_t>(g.out_channels) * g.patch_size(), 2)),
        output(random_values(static_cast<std::size_t>(g.batch) * g.out_channels * g.out_height() *
                                 g.out_width(), 3)) {}
};

void set_counters(benchmark::State& state, const ConvGeometry& g) {
  const double macs = static_cast<double>(g.batch) * g.out_channels * g.out_height() * g.out_width() *
                      g.patch_size();
  state.counters["GFLOPS"] =
      benchmark::Counter(2.0 * macs, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::kIs1000);
}

template <auto Fn>
void BM_Forward(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers b(g);
  for (auto _ : state) {
    Fn(g, b.input, b.weight, b.output);
    benchmark::DoNotOptimize(b.output.data());
  }
  set_counters(state, g);
}

template <auto Fn>
void BM_BackwardInput(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers b(g);
  for (auto _ : state) {
    Fn(g, b.output, b.weight, b.input);
    benchmark::DoNotOptimize(b.input.data());
  }
  set_counters(state, g);
}

template <auto Fn>
void BM_BackwardWeight(benchmark::State& state) {
  const auto g = geometry(state);
  Buffers b(g);
  for (auto _ : state) {
    Fn(g, b.input, b.output, b.weight);
    benchmark::DoNotOptimize(b.weight.data());
  }
  set_counters(state, g);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({14, 48, 8, 16, 1});   // message passing at 8x8
  b->Args({14, 48, 16, 16, 1});  // message passing at 16x16
  b->Args({14, 16, 32, 16, 1});  // decoder conv at 32x32
  b->Args({14, 13, 32, 16, 1});  // discriminator input conv
  b->Args({14, 16, 32, 16, 2});  // discriminator downsampling
}

}  // namespace

BENCHMARK(BM_Forward<kernels::conv2d_forward>)->Apply(shapes);
BENCHMARK(BM_Forward<kernels::reference::conv2d_forward>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<kernels::conv2d_backward_input>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<kernels::reference::conv2d_backward_input>)->Apply(shapes);
BENCHMARK(BM_BackwardWeight<kernels::conv2d_backward_weight>)->Apply(shapes);
BENCHMARK(BM_BackwardWeight<kernels::reference::conv2d_backward_weight>)->Apply(shapes);

BENCHMARK_MAIN();
