#pragma once

#include <map>
#include <string>
#include <vector>

namespace dmimo {

// exp(mean(log r)); every rate must be positive (callers exclude unserved
// users and report the count).
double geometric_mean(const std::vector<double>& rates);

// Lower empirical quantile: the smallest sample whose cumulative share
// reaches q. quantile({1,2,3,4}, 0.05) == 1.
double quantile(std::vector<double> rates, double q);

// Empirical CDF evaluated on the supplied grid.
std::vector<std::pair<double, double>> rate_cdf(
    const std::vector<double>& rates, const std::vector<double>& grid);

struct SchemeMetrics {
  std::string scheme;
  std::string scenario;
  double geomean_rate = 0.0;           // over served users
  std::map<int, double> percentiles;   // 5, 25, 50, 75, 95 over all users
  double utility = 0.0;                // sum of ln(rate) over served users
  int served = 0;
  int unserved = 0;
};

SchemeMetrics compute_scheme_metrics(const std::string& scheme,
                                     const std::string& scenario,
                                     const std::vector<double>& rates);

struct MetricsReport {
  std::vector<SchemeMetrics> schemes;

  std::string to_json() const;
  void save_json(const std::string& path) const;
  const SchemeMetrics& find(const std::string& scheme,
                            const std::string& scenario) const;
};

}  // namespace dmimo
