#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "hmmilm/gibbs.hpp"
#include "hmmilm/iffbs.hpp"
#include "hmmilm/rng.hpp"
#include "hmmilm/simulator.hpp"

using namespace hmmilm;

namespace {

// Plant-grid style problem on a rows x cols lattice with order-3 queen neighbourhoods.
struct Setup {
  SimConfig sim;
  Outbreak outbreak;

  Setup(int rows, int cols) {
    sim.population = queen_neighbors(GridSpec{rows, cols, 1.0, 0.5}, 3);
    sim.model.initial = InitialStateDist(rows * cols, {0.99, 0.01, 0.0});
    sim.truth.theta = 0.55;
    sim.truth.m = 3.0;
    sim.truth.alpha = 0.015;
    sim.truth.beta = {0.07, 3.0, NAN};
    sim.horizon = 7;
    sim.seed = 11;
    outbreak = simulate_outbreak(sim);
  }
};

void BM_IffbsSweep(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  IffbsEngine engine(s.sim.population, s.sim.model, s.outbreak.detections, s.outbreak.states, s.sim.truth);
  FilterWorkspace ws;
  ws.resize(s.sim.horizon);
  const std::vector<std::uint8_t> pinned(s.sim.population.size(), 0);
  Rng rng(1);
  for (auto _ : state) engine.sweep(pinned, ws, rng);
  state.SetItemsProcessed(state.iterations() * s.sim.population.size());
}
BENCHMARK(BM_IffbsSweep)->Args({10, 10})->Args({15, 15})->Args({26, 20})->Unit(benchmark::kMillisecond);

void BM_FilterOneIndividual(benchmark::State& state) {
  const Setup s(26, 20);
  IffbsEngine engine(s.sim.population, s.sim.model, s.outbreak.detections, s.outbreak.states, s.sim.truth);
  FilterWorkspace ws;
  ws.resize(s.sim.horizon);
  const int i = 10 * 20 + 10;
  for (auto _ : state) {
    engine.filter(i, ws);
    benchmark::DoNotOptimize(ws.log_filtered.data());
  }
}
BENCHMARK(BM_FilterOneIndividual);

void BM_ParameterLogLikelihood(benchmark::State& state) {
  const Setup s(26, 20);
  IffbsEngine engine(s.sim.population, s.sim.model, s.outbreak.detections, s.outbreak.states, s.sim.truth);
  const SufficientStats stats =
      SufficientStats::compute(engine.states(), s.outbreak.detections, s.sim.model, engine.cache());
  const std::vector<double> weights(engine.cache().weights().begin(), engine.cache().weights().end());
  for (auto _ : state) {
    double ll = stats.infection_log_lik(0.015, weights) + stats.removal_log_lik(3.0) + stats.observation_log_lik(0.55);
    benchmark::DoNotOptimize(ll);
  }
}
BENCHMARK(BM_ParameterLogLikelihood);

void BM_GibbsIteration(benchmark::State& state) {
  const Setup s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const FitProblem problem{s.sim.population, s.sim.model, s.outbreak.detections, default_priors()};
  MCMCConfig cfg;
  cfg.chains = 1;
  GibbsChain chain(problem, cfg, 0);
  for (int k = 0; k < 200; ++k) chain.iterate(true);
  for (auto _ : state) chain.iterate(false);
}
BENCHMARK(BM_GibbsIteration)->Args({10, 10})->Args({15, 15})->Args({26, 20})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
