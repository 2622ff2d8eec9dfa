#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmimo/config.hpp"
#include "dmimo/metrics.hpp"
#include "dmimo/num.hpp"
#include "dmimo/scheduler.hpp"

namespace dmimo {

// Scheme names: max_sinr, num_cellular, num_distributed, num_unique,
// vq_cellular, vq_greedy.
struct SchemeResult {
  std::string scheme;
  std::string scenario;  // "shared" or "split"
  std::vector<double> rates;  // per user, bits/s/Hz
};

struct PipelineResult {
  std::vector<SchemeResult> schemes;
  MetricsReport report;
  double num_bound_utility = 0.0;     // num_distributed
  double realized_utility = 0.0;      // vq_greedy
};

// Full chain for one scenario: topology -> rates -> NUM -> unique ->
// schedule -> metrics. Artifacts (gains/catalog/allocation/schedule CSVs,
// per-user rates CSV, report JSON) land in out_dir when it is non-empty.
// `only_scheme` restricts the emitted schemes (solves still run as needed).
PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::string& scenario,
                            const std::string& out_dir = {},
                            const std::optional<std::string>& only_scheme = {});

// rates.csv with fixed columns: user_id, scheme, scenario, rate_bps_hz.
void save_rates_csv(const std::vector<SchemeResult>& schemes,
                    const std::string& path);
std::vector<SchemeResult> load_rates_csv(const std::string& path);

}  // namespace dmimo
