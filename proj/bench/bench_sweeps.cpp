// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "rbopt/log.hpp"
#include "rbopt/study.hpp"
#include "rbopt/sweep.hpp"

using namespace rbopt;

namespace {

struct Fixture {
  DiscreteOperators ops;
  SnapshotStore store;
  ConstantsCache constants;
  std::vector<ModelParams> mus;
  ReducedBasis basis;

  Fixture() : ops(spec(), disc()), store(ops), constants(ops) {
    rbopt::log::set_level(rbopt::log::Level::Error);
    ParameterBox box;
    box.kind = ModelKind::BlackScholes;
    box.lower = {0.475, 0.0014, 0.0475};
    box.upper = {0.525, 0.0016, 0.0525};
    box.active_coords = {0, 1, 2};
    box.defaults = ModelParams::black_scholes(0.5, 0.0015, 0.05);
    mus = box.random(32, 1);
    TrainingConfig tc;
    tc.train_set = box.tensor_grid(3);
    tc.n_max = 10;
    basis = pod_angle_greedy(tc, ops, store, constants).basis;
    store.prefetch(mus, max_workers());
    for (const auto& mu : mus) constants.get(mu);
  }
  static OptionSpec spec() { return {OptionType::AmericanPut, 100, 1, ModelKind::BlackScholes}; }
  static Discretization disc() { return Discretization{}; }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_DetailedSweep(benchmark::State& state) {
  auto& f = fixture();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = workers == 0 ? detailed_sweep_serial(f.ops, f.mus, {}) : detailed_sweep(f.ops, f.mus, {}, workers);
    benchmark::DoNotOptimize(r);
  }
}

void BM_ScoreSweep(benchmark::State& state) {
  auto& f = fixture();
  const ReducedOperators rops = project_operators(f.basis, f.ops);
  ScoreContext ctx{&f.ops, &rops, &f.constants, &f.store, {}};
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = workers == 0 ? score_sweep_serial(ErrorMeasure::EnergyApost, ctx, f.mus)
                          : score_sweep(ErrorMeasure::EnergyApost, ctx, f.mus, workers);
    benchmark::DoNotOptimize(r);
  }
}

void BM_EvaluateSet(benchmark::State& state) {
  auto& f = fixture();
  const ReducedOperators rops = project_operators(f.basis, f.ops);
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = workers == 0 ? evaluate_set_serial(rops, f.mus, {}, &f.constants, &f.store)
                          : evaluate_set(rops, f.mus, {}, &f.constants, &f.store, workers);
    benchmark::DoNotOptimize(r);
  }
}

// range(0): 0 = serial reference, otherwise OpenMP worker count
void worker_args(benchmark::internal::Benchmark* b) {
  b->Arg(0);
  for (int w = 1; w <= max_workers(); w *= 2) b->Arg(w);
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_DetailedSweep)->Apply(worker_args);
BENCHMARK(BM_ScoreSweep)->Apply(worker_args);
BENCHMARK(BM_EvaluateSet)->Apply(worker_args);

BENCHMARK_MAIN();
