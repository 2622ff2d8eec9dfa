#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "dmimo/num.hpp"
#include "dmimo/scheduler.hpp"

using namespace dmimo;

static void VqGreedy(benchmark::State& state) {
  const bench::DeskInstance inst(5, 30);
  const auto catalog =
      build_catalog(inst.gains, inst.layout.stations, Precoder::kZf, 4);
  const auto unique = unique_association(
      solve_ucs(catalog, inst.layout.stations), catalog);
  const int horizon = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto schedule =
        run_schedule(unique, catalog, inst.layout.stations, horizon);
    benchmark::DoNotOptimize(schedule);
  }
  state.SetItemsProcessed(state.iterations() * horizon);
}
BENCHMARK(VqGreedy)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
