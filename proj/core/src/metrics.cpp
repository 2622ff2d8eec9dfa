#include "dmimo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dmimo {

double geometric_mean(const std::vector<double>& rates) {
  if (rates.empty()) throw std::invalid_argument("empty rate list");
  double log_sum = 0.0;
  for (const double r : rates) {
    if (!(r > 0.0)) throw std::invalid_argument("rates must be positive");
    log_sum += std::log(r);
  }
  return std::exp(log_sum / rates.size());
}

double quantile(std::vector<double> rates, double q) {
  if (rates.empty()) throw std::invalid_argument("empty rate list");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("q must be in [0,1]");
  std::sort(rates.begin(), rates.end());
  const auto n = static_cast<double>(rates.size());
  const auto idx = static_cast<std::size_t>(
      std::max(0.0, std::ceil(q * n) - 1.0));
  return rates[std::min(idx, rates.size() - 1)];
}

std::vector<std::pair<double, double>> rate_cdf(
    const std::vector<double>& rates, const std::vector<double>& grid) {
  if (rates.empty()) throw std::invalid_argument("empty rate list");
  std::vector<double> sorted = rates;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf;
  cdf.reserve(grid.size());
  for (const double g : grid) {
    const auto count =
        std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
    cdf.emplace_back(g, static_cast<double>(count) / sorted.size());
  }
  return cdf;
}

SchemeMetrics compute_scheme_metrics(const std::string& scheme,
                                     const std::string& scenario,
                                     const std::vector<double>& rates) {
  SchemeMetrics m;
  m.scheme = scheme;
  m.scenario = scenario;
  std::vector<double> served;
  for (const double r : rates) {
    if (r > 0.0) {
      served.push_back(r);
      m.utility += std::log(r);
    }
  }
  m.served = static_cast<int>(served.size());
  m.unserved = static_cast<int>(rates.size() - served.size());
  if (!served.empty()) m.geomean_rate = geometric_mean(served);
  for (const int p : {5, 25, 50, 75, 95}) {
    m.percentiles[p] = quantile(rates, p / 100.0);
  }
  return m;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["schemes"] = nlohmann::json::array();
  for (const SchemeMetrics& m : schemes) {
    nlohmann::json row;
    row["scheme"] = m.scheme;
    row["scenario"] = m.scenario;
    row["geomean_rate"] = m.geomean_rate;
    for (const auto& [p, v] : m.percentiles) {
      row["percentiles"]["p" + std::to_string(p)] = v;
    }
    row["utility"] = m.utility;
    row["served"] = m.served;
    row["unserved"] = m.unserved;
    j["schemes"].push_back(row);
  }
  return j.dump(2);
}

void MetricsReport::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << to_json() << '\n';
}

const SchemeMetrics& MetricsReport::find(const std::string& scheme,
                                         const std::string& scenario) const {
  for (const SchemeMetrics& m : schemes) {
    if (m.scheme == scheme && m.scenario == scenario) return m;
  }
  throw std::out_of_range("no metrics for " + scheme + "/" + scenario);
}

}  // namespace dmimo
