#include <benchmark/benchmark.h>

#include "kyle/equilibrium.hpp"

namespace {

void BM_SolveClassical(benchmark::State& state) {
  const kyle::ModelParams p;
  const kyle::TimeGrid grid(p.T, static_cast<int>(state.range(0)));
  const kyle::IntensityPath init = kyle::classical_kyle_intensity(p, grid);
  for (auto _ : state)
    benchmark::DoNotOptimize(kyle::solve_pontryagin(p, kyle::initial_covariance(p), init));
}
BENCHMARK(BM_SolveClassical)->Arg(250)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_SolveWeakFeedback(benchmark::State& state) {
  kyle::ModelParams p;
  p.sigma_m = 0.5;
  p.sigma_c = 0.5;
  p.kappa_m = 0.2;
  p.kappa_c = 0.1;
  p.gamma_F = 0.1 * static_cast<double>(state.range(0));
  p.gamma_C = 0.05 * static_cast<double>(state.range(0));
  p.var_m0 = 0.5;
  p.var_c0 = 0.5;
  const kyle::TimeGrid grid(p.T, 1000);
  const kyle::IntensityPath init = kyle::classical_kyle_intensity(p, grid);
  for (auto _ : state)
    benchmark::DoNotOptimize(kyle::solve_pontryagin(p, kyle::initial_covariance(p), init));
}
BENCHMARK(BM_SolveWeakFeedback)->Arg(1)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FixedPointMap(benchmark::State& state) {
  const kyle::ModelParams p;
  const kyle::TimeGrid grid(p.T, 1000);
  const kyle::IntensityPath beta =
      kyle::classical_kyle_intensity(p, grid).truncated(kyle::truncated_last_node(grid));
  for (auto _ : state)
    benchmark::DoNotOptimize(kyle::fixed_point_map(beta, p, kyle::initial_covariance(p)));
}
BENCHMARK(BM_FixedPointMap);

}  // namespace
