#include <benchmark/benchmark.h>

#include "dmimo/mc_oracle.hpp"

using namespace dmimo;

static void ProxyVerification(benchmark::State& state) {
  OracleSetup setup;
  setup.precoder = state.range(1) == 0 ? Precoder::kZf : Precoder::kMrt;
  setup.cluster = Cluster({0});
  const int antennas = static_cast<int>(state.range(0));
  BaseStation bs;
  bs.id = 0;
  bs.tx_power_w = 1.0;
  bs.antennas = antennas;
  bs.budget = BudgetRule{0, {{1, antennas / 10}}};
  setup.stations = {bs};
  setup.beta = {1.0};
  setup.trials = 100;
  for (auto _ : state) {
    auto report = verify_proxy(setup);
    benchmark::DoNotOptimize(report);
  }
  state.SetItemsProcessed(state.iterations() * setup.trials);
}
BENCHMARK(ProxyVerification)->Args({100, 0})->Args({100, 1})->Args({256, 0});
