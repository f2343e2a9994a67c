#include <benchmark/benchmark.h>

#include "kyle/filter.hpp"
#include "kyle/intensity.hpp"
#include "kyle/riccati.hpp"

namespace {

kyle::ModelParams feedback_params() {
  kyle::ModelParams p;
  p.sigma_m = 0.5;
  p.sigma_c = 0.5;
  p.kappa_m = 0.2;
  p.kappa_c = 0.1;
  p.gamma_F = 1.0;
  p.gamma_C = 0.5;
  p.var_m0 = 0.5;
  p.var_c0 = 0.5;
  return p;
}

kyle::IntensityPath truncated_beta(const kyle::ModelParams& p, int n) {
  const kyle::TimeGrid grid(p.T, n);
  return kyle::classical_kyle_intensity(p, grid).truncated(kyle::truncated_last_node(grid));
}

void BM_RiccatiRhs(benchmark::State& state) {
  const kyle::ModelParams p = feedback_params();
  const kyle::CovMatrix s(1.0, 0.2, 0.1, 0.5, 0.05, 0.6);
  double beta = 0.7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kyle::riccati_rhs(s, beta, p));
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_RiccatiRhs);

void BM_IntegrateRiccati(benchmark::State& state) {
  const kyle::ModelParams p = feedback_params();
  const kyle::IntensityPath beta = truncated_beta(p, static_cast<int>(state.range(0)));
  const kyle::CovMatrix s0 = kyle::initial_covariance(p);
  for (auto _ : state) benchmark::DoNotOptimize(kyle::integrate_riccati(beta, s0, p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_IntegrateRiccati)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_LambdaSup(benchmark::State& state) {
  const kyle::ModelParams p = feedback_params();
  const kyle::IntensityPath beta = truncated_beta(p, 1000);
  const kyle::CovPath cov = kyle::integrate_riccati(beta, kyle::initial_covariance(p), p);
  for (auto _ : state) benchmark::DoNotOptimize(kyle::lambda_sup(cov, beta, p));
}
BENCHMARK(BM_LambdaSup);

void BM_BreakdownScan(benchmark::State& state) {
  kyle::ModelParams p = feedback_params();
  const kyle::IntensityPath beta = truncated_beta(p, 1000);
  const std::vector<double> H{0, 1, 10, 100, 1e3, 1e4, 1e5, 1e6};
  for (auto _ : state)
    benchmark::DoNotOptimize(kyle::scan_blowup(p, beta, kyle::initial_covariance(p), H));
}
BENCHMARK(BM_BreakdownScan)->Unit(benchmark::kMillisecond);

}  // namespace
