// Serial reference vs OpenMP kernels. Run with OMP_NUM_THREADS to vary the
// parallel side.
#include <map>
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "mvedit/flow.hpp"
#include "mvedit/kinematics.hpp"
#include "mvedit/models.hpp"
#include "mvedit/synth.hpp"

using namespace mvedit;

namespace {

ImageD noise_image(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD img(size, size, 3);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

FlowField smooth_flow(int size) {
  FlowField f(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) f.set(x, y, 4.0 * std::sin(y * 0.05), 3.0 * std::cos(x * 0.04));
  }
  return f;
}

struct ProjectionCase {
  SyntheticScene synth;
  ObjectPoints original;
  ObjectPoints moved;

  explicit ProjectionCase(int size)
      : synth([size] {
          SynthConfig c;
          c.width = c.height = size;
          return c;
        }()),
        original(select_object(synth.scene(), 8)),
        moved(apply_rotation(original, 30.0)) {}
};

const ProjectionCase& projection_case(int size) {
  static std::map<int, std::unique_ptr<ProjectionCase>> cache;
  auto& slot = cache[size];
  if (!slot) slot = std::make_unique<ProjectionCase>(size);
  return *slot;
}

template <bool Parallel>
void BM_ProjectFlow(benchmark::State& state) {
  const auto& c = projection_case(static_cast<int>(state.range(0)));
  const auto& view = c.synth.scene().views[0];
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? project_flow(c.original, c.moved, view)
                                      : serial::project_flow(c.original, c.moved, view));
  }
}

template <bool Parallel>
void BM_BackwardWarp(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto img = noise_image(n, 1);
  const auto flow = smooth_flow(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? backward_warp(img, flow) : serial::backward_warp(img, flow));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_ForwardSplat(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto img = noise_image(n, 2);
  const auto flow = smooth_flow(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? forward_splat(img, flow) : serial::forward_splat(img, flow));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void BM_BlockMatch(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto from = noise_image(n, 3);
  const auto to = noise_image(n, 4);
  BlockMatcherOptions opts;
  opts.search_radius = 8;
  const BlockMatcher matcher(opts);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? matcher.estimate(from, to) : serial::block_match(from, to, opts));
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_ProjectFlow<false>)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ProjectFlow<true>)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardWarp<false>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackwardWarp<true>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardSplat<false>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardSplat<true>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockMatch<false>)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BlockMatch<true>)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
