#include <benchmark/benchmark.h>

#include "kyle/equilibrium.hpp"
#include "kyle/simulator.hpp"

namespace {

const kyle::MarketSimulator& classical_simulator() {
  static const kyle::MarketSimulator sim = [] {
    const kyle::ModelParams p;
    const kyle::TimeGrid grid(p.T, 1000);
    const auto sol = kyle::solve_pontryagin(p, kyle::initial_covariance(p),
                                            kyle::classical_kyle_intensity(p, grid));
    return kyle::MarketSimulator(sol.beta_star, p, kyle::initial_covariance(p), sol.cov_path);
  }();
  return sim;
}

void BM_SimulatePath(benchmark::State& state) {
  const kyle::MarketSimulator& sim = classical_simulator();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim.simulate(seed++));
}
BENCHMARK(BM_SimulatePath);

void BM_MonteCarlo(benchmark::State& state) {
  const kyle::MarketSimulator& sim = classical_simulator();
  kyle::McOptions opt;
  opt.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kyle::monte_carlo(1000, 7, sim, opt));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_MonteCarlo)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace
