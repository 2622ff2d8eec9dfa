#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "dmimo/num.hpp"

using namespace dmimo;

static void SolveUcs(benchmark::State& state) {
  const bench::DeskInstance inst(static_cast<int>(state.range(0)),
                                 6 * static_cast<int>(state.range(0)));
  const auto catalog =
      build_catalog(inst.gains, inst.layout.stations, Precoder::kZf, 4);
  for (auto _ : state) {
    auto alloc = solve_ucs(catalog, inst.layout.stations);
    benchmark::DoNotOptimize(alloc);
  }
}
BENCHMARK(SolveUcs)->Arg(3)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
