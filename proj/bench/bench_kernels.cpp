#include <benchmark/benchmark.h>

#include <random>

#include "mvsde/analysis.hpp"
#include "mvsde/measures.hpp"
#include "mvsde/model.hpp"
#include "mvsde/schemes.hpp"

using namespace mvsde;

namespace {

SimConfig awea_config(std::size_t n, int workers) {
  SimConfig c;
  c.grid = AnchorGrid::from_delta(0.5, 0x1.0p-8);
  c.horizon_t = 10;
  c.n_particles = n;
  c.workers = workers;
  return c;
}

void set_steps(benchmark::State& state, double steps_per_iter) {
  state.counters["steps/s"] =
      benchmark::Counter(steps_per_iter * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

void BM_AweaSerial(benchmark::State& state) {
  const auto model = builtin("example2");
  const auto c = awea_config(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(run_awea_serial(model, c));
  set_steps(state, double(c.n_particles) * c.n_blocks() * c.grid.M);
}

void BM_AweaParallel(benchmark::State& state) {
  const auto model = builtin("example2");
  const auto c = awea_config(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(run_awea(model, c));
  set_steps(state, double(c.n_particles) * c.n_blocks() * c.grid.M);
}

RmseConfig rmse_config(int workers) {
  RmseConfig c;
  c.fine_delta = 0x1.0p-10;
  c.coarse_deltas = {0x1.0p-5, 0x1.0p-6, 0x1.0p-7};
  c.t_eval = {5};
  c.n_paths = 16;
  c.workers = workers;
  return c;
}

void BM_RmseSerial(benchmark::State& state) {
  const auto model = builtin("example1");
  const auto c = rmse_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(rmse_paths_serial(model, c));
}

void BM_RmseParallel(benchmark::State& state) {
  const auto model = builtin("example1");
  const auto c = rmse_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rmse_paths(model, c));
}

EmpiricalMeasure random_measure(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> flat(n * d);
  for (auto& x : flat) x = g(rng);
  return EmpiricalMeasure::from_flat(d, flat);
}

void BM_W2ExactSmall(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_measure(n, 2, 1), b = random_measure(n, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(w2_exact_small(a, b));
}

void BM_W2ToGaussian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_measure(n, 1, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(w2_to_gaussian_1d(a, {0.0, 1.0}, default_quadrature_size(n)));
  }
}


}  // namespace

BENCHMARK(BM_AweaSerial)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AweaParallel)
    ->ArgsProduct({{50, 200}, {1, 2, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_RmseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RmseParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_W2ExactSmall)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_W2ToGaussian)->Arg(1000)->Arg(8000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
