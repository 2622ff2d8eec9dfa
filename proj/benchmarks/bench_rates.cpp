#include <benchmark/benchmark.h>

#include "bench_common.hpp"

using namespace dmimo;

static void CatalogBuild(benchmark::State& state) {
  const bench::DeskInstance inst(static_cast<int>(state.range(0)),
                                 6 * static_cast<int>(state.range(0)));
  const auto precoder = state.range(1) == 0 ? Precoder::kZf : Precoder::kMrt;
  for (auto _ : state) {
    auto catalog = build_catalog(inst.gains, inst.layout.stations, precoder, 4);
    benchmark::DoNotOptimize(catalog);
  }
  state.SetItemsProcessed(state.iterations() * inst.gains.num_users() * 4);
}
BENCHMARK(CatalogBuild)->Args({5, 0})->Args({5, 1})->Args({15, 0});
