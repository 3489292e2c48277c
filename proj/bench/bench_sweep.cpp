// Serial versus OpenMP seed sweeps over the same game runs.

#include <benchmark/benchmark.h>

#include "dyrun/games.hpp"

namespace {

using namespace dyrun::games;

GameConfig config(std::int64_t runs) {
  GameConfig cfg;
  cfg.runs = static_cast<std::uint64_t>(runs);
  cfg.attacker = AttackerKind::mixed;
  return cfg;
}

template <GameResult (*Sweep)(const GameConfig&, const RunFn&)>
void nsl_sweep(benchmark::State& state) {
  const GameConfig cfg = config(state.range(0));
  RunFn fn = [&cfg](std::uint64_t s) { return nsl_run(cfg, s); };
  for (auto _ : state) benchmark::DoNotOptimize(Sweep(cfg, fn));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <GameResult (*Sweep)(const GameConfig&, const RunFn&)>
void kv_sweep(benchmark::State& state) {
  const GameConfig cfg = config(state.range(0));
  RunFn fn = [&cfg](std::uint64_t s) { return kv_run(cfg, s); };
  for (auto _ : state) benchmark::DoNotOptimize(Sweep(cfg, fn));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(nsl_sweep<sweep_serial>)->Name("nsl/serial")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(nsl_sweep<sweep_parallel>)->Name("nsl/openmp")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(kv_sweep<sweep_serial>)->Name("kv/serial")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(kv_sweep<sweep_parallel>)->Name("kv/openmp")->Arg(64)->Arg(256)->UseRealTime();

BENCHMARK_MAIN();
