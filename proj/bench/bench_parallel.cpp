// OpenMP kernels against their serial references:
//   rollout_batch vs rollout_batch_serial, and per-demo gradient tapes with
//   and without threads.

#include <benchmark/benchmark.h>

#include <random>

#include "renpol/train.hpp"

using namespace renpol;

namespace {

PolicyConfig bench_policy() {
  PolicyConfig pc;
  pc.state_dim = 2;
  pc.latent_dim = 32;
  pc.implicit_dim = 16;
  pc.coupling_layers = 4;
  pc.coupling_width = 32;
  return pc;
}

std::vector<std::vector<double>> inits(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<std::vector<double>> out(n, std::vector<double>(2));
  for (auto& v : out)
    for (double& x : v) x = normal(rng);
  return out;
}

void rollouts(benchmark::State& state, bool parallel) {
  const auto policy = compile(init_policy(bench_policy(), 0));
  const auto starts = inits(static_cast<std::size_t>(state.range(0)));
  rollout::SolverConfig cfg;
  cfg.horizon = 100;
  for (auto _ : state) {
    auto out = parallel ? rollout::rollout_batch(policy, starts, cfg) : rollout::rollout_batch_serial(policy, starts, cfg);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void gradients(benchmark::State& state, bool parallel) {
  train::TrainConfig cfg;
  cfg.policy = bench_policy();
  cfg.solver.horizon = 30;
  const auto raw = data::synthesize(data::CurveKind::sine, static_cast<std::size_t>(state.range(0)), 100, 2, 0.01, 3);
  const auto td = train::prepare(raw, cfg.solver.horizon);
  const Policy policy = init_policy(cfg.policy, 0);
  for (auto _ : state) {
    auto g = train::loss_and_gradients(policy, td.demos, cfg, parallel);
    benchmark::DoNotOptimize(g);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(rollouts, serial, false)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(rollouts, openmp, true)->Arg(16)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gradients, serial, false)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(gradients, openmp, true)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
