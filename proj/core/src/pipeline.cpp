#include "dmimo/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dmimo/mc_oracle.hpp"
#include "dmimo/rng.hpp"

namespace dmimo {

namespace {

// Max-SINR association with per-BS round robin over the S_j(1) slots: user k
// gets fraction band_share * min(1, S_j / K_j) on its strongest BS.
SchemeResult max_sinr_scheme(const LinkGainMap& gains,
                             const std::vector<BaseStation>& stations,
                             const ClusterCatalog& cellular_catalog,
                             const std::optional<Tier>& tier,
                             double band_share, const std::string& scenario) {
  const int num_users = gains.num_users();
  std::vector<int> association(num_users, -1);
  std::vector<int> load(stations.size(), 0);
  for (int k = 0; k < num_users; ++k) {
    double best = -1.0;
    for (const BaseStation& bs : stations) {
      if (tier && bs.tier != *tier) continue;
      const double rx = bs.tx_power_w * gains.beta(k, bs.id);
      if (rx > best) {
        best = rx;
        association[k] = bs.id;
      }
    }
    if (association[k] >= 0) ++load[association[k]];
  }
  SchemeResult result{"max_sinr", scenario, std::vector<double>(num_users, 0.0)};
  for (int k = 0; k < num_users; ++k) {
    if (association[k] < 0) continue;
    const auto entry = cellular_catalog.find(k, Cluster({association[k]}));
    if (!entry) continue;  // catalog holds the strongest BS per user
    const BaseStation& bs = stations[association[k]];
    const double fraction =
        band_share * std::min(1.0, static_cast<double>(bs.users_per_rb(1)) /
                                       load[association[k]]);
    result.rates[k] = fraction * cellular_catalog.entry(*entry).rate;
  }
  return result;
}

// In the split scenario each user picks the band whose strongest BS gives
// the larger in-band SINR, then gets round-robin service inside that band.
SchemeResult max_sinr_split_scheme(const LinkGainMap& gains,
                                   const std::vector<BaseStation>& stations,
                                   const ClusterCatalog& macro_catalog,
                                   const ClusterCatalog& pico_catalog,
                                   double rho) {
  const int num_users = gains.num_users();
  const auto band_sinr = [&](int k, Tier tier, int* best_bs) {
    double best = -1.0;
    double total = 0.0;
    for (const BaseStation& bs : stations) {
      if (bs.tier != tier) continue;
      const double rx = bs.tx_power_w * gains.beta(k, bs.id);
      total += rx;
      if (rx > best) {
        best = rx;
        *best_bs = bs.id;
      }
    }
    if (best < 0.0) return -1.0;
    return best / (gains.noise_power_w + total - best);
  };

  std::vector<int> association(num_users, -1);
  std::vector<char> on_macro(num_users, 0);
  std::vector<int> load(stations.size(), 0);
  for (int k = 0; k < num_users; ++k) {
    int macro_bs = -1, pico_bs = -1;
    const double macro_sinr = band_sinr(k, Tier::kMacro, &macro_bs);
    const double pico_sinr = band_sinr(k, Tier::kPico, &pico_bs);
    on_macro[k] = macro_sinr >= pico_sinr;
    association[k] = on_macro[k] ? macro_bs : pico_bs;
    if (association[k] >= 0) ++load[association[k]];
  }
  SchemeResult result{"max_sinr", "split", std::vector<double>(num_users, 0.0)};
  for (int k = 0; k < num_users; ++k) {
    if (association[k] < 0) continue;
    const ClusterCatalog& catalog = on_macro[k] ? macro_catalog : pico_catalog;
    const auto entry = catalog.find(k, Cluster({association[k]}));
    if (!entry) continue;
    const BaseStation& bs = stations[association[k]];
    const double share = on_macro[k] ? rho : 1.0 - rho;
    const double fraction =
        share * std::min(1.0, static_cast<double>(bs.users_per_rb(1)) /
                                  load[association[k]]);
    result.rates[k] = fraction * catalog.entry(*entry).rate;
  }
  return result;
}

double utility_of(const std::vector<double>& rates) {
  double u = 0.0;
  for (const double r : rates) {
    if (r > 0.0) u += std::log(r);
  }
  return u;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config,
                            const std::string& scenario,
                            const std::string& out_dir,
                            const std::optional<std::string>& only_scheme) {
  if (scenario != "shared" && scenario != "split") {
    throw std::invalid_argument("scenario must be \"shared\" or \"split\"");
  }
  namespace fs = std::filesystem;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  const auto artifact = [&](const std::string& name) {
    return out_dir.empty() ? std::string{} : out_dir + "/" + name;
  };

  const Layout layout = build_checkerboard(
      config.topology, config_stage_seed(config, "topology"));
  const LinkGainMap gains =
      compute_link_gains(layout.stations, layout.users, layout.extent_m,
                         config.gains, config_stage_seed(config, "gains"));
  if (!out_dir.empty()) gains.save_csv(artifact("gains.csv"));

  const int n_strongest =
      config.n_strongest == 0 ? config.l_max : config.n_strongest;

  PipelineResult result;
  Allocation bound_alloc;       // num_distributed
  Allocation cellular_alloc;    // num_cellular (for the VQ baseline)
  ClusterCatalog bound_catalog;
  ClusterCatalog cellular_catalog;

  if (scenario == "shared") {
    bound_catalog =
        build_catalog(gains, layout.stations, config.precoder, config.l_max,
                      config.candidate_mode, n_strongest);
    cellular_catalog =
        build_catalog(gains, layout.stations, config.precoder, 1,
                      config.candidate_mode, n_strongest);
    result.schemes.push_back(max_sinr_scheme(gains, layout.stations,
                                             cellular_catalog, std::nullopt,
                                             1.0, scenario));
    cellular_alloc =
        solve_cellular(cellular_catalog, layout.stations, {config.tol});
    result.schemes.push_back(
        {"num_cellular", scenario, cellular_alloc.throughput});
    bound_alloc = solve_ucs(bound_catalog, layout.stations, Utility::kLog,
                            {config.tol});
    result.schemes.push_back({"num_distributed", scenario, bound_alloc.throughput});
  } else {
    const RateOptions macro_opts{Tier::kMacro, Tier::kMacro};
    const RateOptions pico_opts{Tier::kPico, Tier::kPico};
    const ClusterCatalog catalog_macro =
        build_catalog(gains, layout.stations, config.precoder, 1,
                      config.candidate_mode, n_strongest, macro_opts);
    const ClusterCatalog catalog_pico_full =
        build_catalog(gains, layout.stations, config.precoder, config.l_max,
                      config.candidate_mode, n_strongest, pico_opts);
    const ClusterCatalog catalog_pico_cell =
        build_catalog(gains, layout.stations, config.precoder, 1,
                      config.candidate_mode, n_strongest, pico_opts);
    result.schemes.push_back(max_sinr_split_scheme(
        gains, layout.stations, catalog_macro, catalog_pico_cell, config.rho));
    SplitSolution cellular = solve_orthogonal_split(
        catalog_macro, catalog_pico_cell, layout.stations, config.rho,
        {config.tol});
    result.schemes.push_back(
        {"num_cellular", scenario, cellular.alloc.throughput});
    SplitSolution distributed = solve_orthogonal_split(
        catalog_macro, catalog_pico_full, layout.stations, config.rho,
        {config.tol});
    result.schemes.push_back(
        {"num_distributed", scenario, distributed.alloc.throughput});
    bound_alloc = std::move(distributed.alloc);
    bound_catalog = std::move(distributed.catalog);
    cellular_alloc = std::move(cellular.alloc);
    cellular_catalog = std::move(cellular.catalog);
  }

  const Allocation unique = unique_association(bound_alloc, bound_catalog);
  result.schemes.push_back({"num_unique", scenario, unique.throughput});
  if (!out_dir.empty()) {
    save_allocation_json(bound_alloc, bound_catalog,
                         artifact("allocation_" + scenario + ".json"));
  }

  const Allocation cellular_unique =
      unique_association(cellular_alloc, cellular_catalog);
  const Schedule cellular_schedule =
      run_schedule(cellular_unique, cellular_catalog, layout.stations,
                   config.horizon, config.vq);
  result.schemes.push_back(
      {"vq_cellular", scenario, cellular_schedule.throughput});

  const Schedule schedule = run_schedule(unique, bound_catalog, layout.stations,
                                         config.horizon, config.vq);
  const auto violations =
      validate_schedule(schedule, layout.stations, Architecture::kUcs);
  if (!violations.empty()) {
    throw std::runtime_error("scheduler emitted an infeasible schedule: " +
                             violations.front());
  }
  result.schemes.push_back({"vq_greedy", scenario, schedule.throughput});
  if (!out_dir.empty()) {
    schedule.save_csv(artifact("schedule_" + scenario + ".csv"));
  }

  if (config.oracle_enabled) {
    // Spot check of the closed-form rate behind the first served entry.
    for (std::size_t e = 0; e < unique.x.size(); ++e) {
      if (unique.x[e] <= 0.0) continue;
      const CatalogEntry& entry = bound_catalog.entry(static_cast<int>(e));
      if (entry.rate <= 0.0) continue;
      OracleSetup setup;
      setup.precoder = config.precoder;
      setup.cluster = entry.cluster;
      setup.stations = layout.stations;
      setup.beta.resize(layout.stations.size());
      for (std::size_t j = 0; j < layout.stations.size(); ++j) {
        setup.beta[j] = gains.beta(entry.user, static_cast<int>(j));
      }
      setup.noise_power_w = gains.noise_power_w;
      setup.trials = config.oracle_trials;
      setup.seed = config_stage_seed(config, "oracle");
      const OracleReport report = verify_proxy(setup);
      if (!out_dir.empty()) {
        std::ofstream out(artifact("oracle_" + scenario + ".json"));
        out << report.to_json() << '\n';
      }
      break;
    }
  }

  if (only_scheme) {
    std::vector<SchemeResult> filtered;
    for (SchemeResult& s : result.schemes) {
      if (s.scheme == *only_scheme) filtered.push_back(std::move(s));
    }
    if (filtered.empty()) {
      throw std::invalid_argument("unknown scheme " + *only_scheme);
    }
    result.schemes = std::move(filtered);
  }

  for (const SchemeResult& s : result.schemes) {
    result.report.schemes.push_back(
        compute_scheme_metrics(s.scheme, s.scenario, s.rates));
  }
  result.num_bound_utility = bound_alloc.objective;
  result.realized_utility = utility_of(schedule.throughput);

  if (!out_dir.empty()) {
    save_rates_csv(result.schemes, artifact("rates_" + scenario + ".csv"));
    result.report.save_json(artifact("report_" + scenario + ".json"));
  }
  return result;
}

void save_rates_csv(const std::vector<SchemeResult>& schemes,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "user_id,scheme,scenario,rate_bps_hz\n";
  char buf[64];
  for (const SchemeResult& s : schemes) {
    for (std::size_t k = 0; k < s.rates.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.rates[k]);
      out << k << ',' << s.scheme << ',' << s.scenario << ',' << buf << '\n';
    }
  }
}

std::vector<SchemeResult> load_rates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty rates csv");
  std::vector<SchemeResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string user, scheme, scenario, rate;
    if (!std::getline(ss, user, ',') || !std::getline(ss, scheme, ',') ||
        !std::getline(ss, scenario, ',') || !std::getline(ss, rate)) {
      throw std::runtime_error("malformed rates csv line: " + line);
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const SchemeResult& s) {
      return s.scheme == scheme && s.scenario == scenario;
    });
    if (it == out.end()) {
      out.push_back({scheme, scenario, {}});
      it = std::prev(out.end());
    }
    const std::size_t k = std::stoul(user);
    if (it->rates.size() <= k) it->rates.resize(k + 1, 0.0);
    it->rates[k] = std::stod(rate);
  }
  return out;
}

}  // namespace dmimo
