// Command-line front end: experiment orchestration over the dmimo core
// library. Subcommands mirror the pipeline stages (topo, rates, solve,
// schedule), the Monte Carlo link-level oracle, the brute-force NUM grid
// oracle, the full pipeline and CSV report recomputation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmimo/config.hpp"
#include "dmimo/grid_oracle.hpp"
#include "dmimo/mc_oracle.hpp"
#include "dmimo/metrics.hpp"
#include "dmimo/num.hpp"
#include "dmimo/pipeline.hpp"
#include "dmimo/rng.hpp"
#include "dmimo/scheduler.hpp"

namespace {

using namespace dmimo;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

ExperimentConfig load(const Common& common) {
  if (common.config_path.empty()) {
    throw std::runtime_error("--config is required");
  }
  ExperimentConfig config = load_config(common.config_path);
  if (common.seed) config.master_seed = *common.seed;
  return config;
}

struct Stage {
  Layout layout;
  LinkGainMap gains;
};

Stage build_stage(const ExperimentConfig& config) {
  Stage stage;
  stage.layout = build_checkerboard(config.topology,
                                    config_stage_seed(config, "topology"));
  stage.gains = compute_link_gains(stage.layout.stations, stage.layout.users,
                                   stage.layout.extent_m, config.gains,
                                   config_stage_seed(config, "gains"));
  return stage;
}

ClusterCatalog stage_catalog(const ExperimentConfig& config, const Stage& stage) {
  const int n_strongest =
      config.n_strongest == 0 ? config.l_max : config.n_strongest;
  return build_catalog(stage.gains, stage.layout.stations, config.precoder,
                       config.l_max, config.candidate_mode, n_strongest);
}

void ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int run_topo(const Common& common) {
  const ExperimentConfig config = load(common);
  const Stage stage = build_stage(config);
  ensure_dir(common.out_dir);
  stage.gains.save_csv(common.out_dir + "/gains.csv");
  std::cout << "wrote " << common.out_dir << "/gains.csv ("
            << stage.gains.num_users() << " users x "
            << stage.gains.num_stations() << " stations)\n";
  return 0;
}

int run_rates(const Common& common) {
  const ExperimentConfig config = load(common);
  const Stage stage = build_stage(config);
  const ClusterCatalog catalog = stage_catalog(config, stage);
  ensure_dir(common.out_dir);
  catalog.save_csv(common.out_dir + "/catalog.csv");
  std::cout << "wrote " << common.out_dir << "/catalog.csv ("
            << catalog.entries().size() << " entries)\n";
  return 0;
}

int run_solve(const Common& common, bool with_kkt) {
  const ExperimentConfig config = load(common);
  const Stage stage = build_stage(config);
  ensure_dir(common.out_dir);

  Allocation alloc;
  ClusterCatalog catalog;
  if (config.architecture == Architecture::kSplit) {
    const RateOptions macro_opts{Tier::kMacro, Tier::kMacro};
    const RateOptions pico_opts{Tier::kPico, Tier::kPico};
    const int n_strongest =
        config.n_strongest == 0 ? config.l_max : config.n_strongest;
    const auto catalog_macro =
        build_catalog(stage.gains, stage.layout.stations, config.precoder, 1,
                      CandidateMode::kStrongest, 1, macro_opts);
    const auto catalog_pico = build_catalog(
        stage.gains, stage.layout.stations, config.precoder, config.l_max,
        config.candidate_mode, n_strongest, pico_opts);
    SplitSolution split =
        solve_orthogonal_split(catalog_macro, catalog_pico,
                               stage.layout.stations, config.rho, {config.tol});
    alloc = std::move(split.alloc);
    catalog = std::move(split.catalog);
  } else {
    catalog = stage_catalog(config, stage);
    alloc = config.architecture == Architecture::kMcs
                ? solve_mcs(catalog, stage.layout.stations, McsMode::kFree,
                            {config.tol})
                : solve_ucs(catalog, stage.layout.stations, Utility::kLog,
                            {config.tol});
  }
  save_allocation_json(alloc, catalog, common.out_dir + "/allocation.json");
  std::cout << "objective " << alloc.objective << ", duality gap "
            << alloc.duality_gap << ", feasibility residual "
            << alloc.feasibility_residual << '\n';
  if (!alloc.orphans.empty()) {
    std::cerr << "warning: " << alloc.orphans.size()
              << " orphan user(s) excluded from the objective\n";
  }
  if (with_kkt && alloc.arch == Architecture::kUcs) {
    const KktReport kkt = kkt_residuals(alloc, catalog, stage.layout.stations);
    std::cout << "kkt stationarity " << kkt.stationarity_residual
              << ", complementarity " << kkt.complementarity_residual << '\n';
  }
  return 0;
}

int run_schedule_cmd(const Common& common) {
  const ExperimentConfig config = load(common);
  const Stage stage = build_stage(config);
  ensure_dir(common.out_dir);

  if (config.architecture == Architecture::kMcs) {
    const ClusterCatalog catalog = stage_catalog(config, stage);
    const Allocation alloc =
        solve_mcs(catalog, stage.layout.stations, McsMode::kFree, {config.tol});
    const Schedule schedule = run_schedule_mcs(
        alloc, catalog, stage.layout.stations, config.horizon, config.vq);
    schedule.save_csv(common.out_dir + "/schedule.csv");
    std::ofstream(common.out_dir + "/schedule_summary.json")
        << schedule.summary_json(catalog) << '\n';
    const auto violations = validate_schedule(schedule, stage.layout.stations,
                                              Architecture::kMcs);
    std::cout << "schedule over " << config.horizon << " RBs, "
              << violations.size() << " violation(s)\n";
    return violations.empty() ? 0 : 1;
  }

  ClusterCatalog catalog;
  Allocation alloc;
  if (config.architecture == Architecture::kSplit) {
    const RateOptions macro_opts{Tier::kMacro, Tier::kMacro};
    const RateOptions pico_opts{Tier::kPico, Tier::kPico};
    const int n_strongest =
        config.n_strongest == 0 ? config.l_max : config.n_strongest;
    SplitSolution split = solve_orthogonal_split(
        build_catalog(stage.gains, stage.layout.stations, config.precoder, 1,
                      CandidateMode::kStrongest, 1, macro_opts),
        build_catalog(stage.gains, stage.layout.stations, config.precoder,
                      config.l_max, config.candidate_mode, n_strongest,
                      pico_opts),
        stage.layout.stations, config.rho, {config.tol});
    alloc = std::move(split.alloc);
    catalog = std::move(split.catalog);
  } else {
    catalog = stage_catalog(config, stage);
    alloc = solve_ucs(catalog, stage.layout.stations, Utility::kLog,
                      {config.tol});
  }
  const Allocation unique = unique_association(alloc, catalog);
  const Schedule schedule = run_schedule(
      unique, catalog, stage.layout.stations, config.horizon, config.vq);
  schedule.save_csv(common.out_dir + "/schedule.csv");
  std::ofstream(common.out_dir + "/schedule_summary.json")
      << schedule.summary_json(catalog) << '\n';
  const auto violations =
      validate_schedule(schedule, stage.layout.stations, Architecture::kUcs);
  std::cout << "schedule over " << config.horizon << " RBs, "
            << violations.size() << " violation(s)\n";
  return violations.empty() ? 0 : 1;
}

int run_pipeline_cmd(const Common& common, const std::string& scenario,
                     const std::optional<std::string>& scheme, int repeat) {
  ExperimentConfig config = load(common);
  std::vector<std::string> scenarios;
  if (scenario == "both") {
    scenarios = {"shared", "split"};
  } else {
    scenarios = {scenario};
  }
  for (int run = 0; run < repeat; ++run) {
    ExperimentConfig run_config = config;
    std::string dir = common.out_dir;
    if (repeat > 1) {
      run_config.master_seed = mix64(config.master_seed, run);
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), "/run_%03d", run);
      dir += suffix;
    }
    for (const std::string& s : scenarios) {
      const PipelineResult result = run_pipeline(run_config, s, dir, scheme);
      for (const SchemeMetrics& m : result.report.schemes) {
        std::cout << s << '/' << m.scheme << ": geomean " << m.geomean_rate
                  << " bits/s/Hz, utility " << m.utility << ", unserved "
                  << m.unserved << '\n';
      }
    }
  }
  return 0;
}

int run_oracle(const std::string& precoder, int antennas,
               const std::string& s_table, const std::string& cluster_arg,
               const std::string& beta_csv, const std::string& power_csv,
               double noise, int trials, std::uint64_t seed,
               const std::string& out_path) {
  OracleSetup setup;
  setup.precoder = precoder == "mrt" ? Precoder::kMrt : Precoder::kZf;
  const std::vector<double> beta = parse_doubles(beta_csv);
  std::vector<double> powers(beta.size(), 1.0);
  if (!power_csv.empty()) {
    powers = parse_doubles(power_csv);
    if (powers.size() != beta.size()) {
      throw std::runtime_error("--power length must match --beta");
    }
  }
  BudgetRule budget;
  {
    std::istringstream ss(s_table);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        budget.slope = std::stoi(item);
        budget.table.clear();
        break;
      }
      budget.table[std::stoi(item.substr(0, colon))] =
          std::stoi(item.substr(colon + 1));
    }
  }
  for (std::size_t j = 0; j < beta.size(); ++j) {
    BaseStation bs;
    bs.id = static_cast<int>(j);
    bs.tx_power_w = powers[j];
    bs.antennas = antennas;
    bs.budget = budget;
    setup.stations.push_back(bs);
  }
  std::vector<int> members;
  std::istringstream ss(cluster_arg);
  std::string item;
  while (std::getline(ss, item, ';')) members.push_back(std::stoi(item));
  setup.cluster = Cluster(members);
  setup.beta = beta;
  setup.noise_power_w = noise;
  setup.trials = trials;
  setup.seed = seed;

  const OracleReport report = verify_proxy(setup);
  if (out_path.empty()) {
    std::cout << report.to_json() << '\n';
  } else {
    std::ofstream(out_path) << report.to_json() << '\n';
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

int run_num_oracle(const Common& common, double step,
                   std::int64_t max_leaves) {
  const ExperimentConfig config = load(common);
  const Stage stage = build_stage(config);
  const ClusterCatalog catalog = stage_catalog(config, stage);
  const GridOracleResult result =
      grid_search_ucs(catalog, stage.layout.stations, step, max_leaves);
  nlohmann::json j;
  j["objective"] = result.objective;
  for (const auto& [label, value] : result.lambda) {
    j["lambda"][std::to_string(label)] = value;
  }
  j["grid_points"] = result.leaves;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_report(const std::string& rates_path, const std::string& out_path) {
  const auto schemes = load_rates_csv(rates_path);
  MetricsReport report;
  for (const SchemeResult& s : schemes) {
    report.schemes.push_back(
        compute_scheme_metrics(s.scheme, s.scenario, s.rates));
  }
  if (out_path.empty()) {
    std::cout << report.to_json() << '\n';
  } else {
    report.save_json(out_path);
    std::cout << "wrote " << out_path << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonized cellular / distributed massive-MIMO network "
               "optimizer and simulator"};
  app.require_subcommand(1);

  Common common;
  std::string stage = "cli";
  try {
    auto add_common = [&](CLI::App* cmd) {
      cmd->add_option("--config", common.config_path, "experiment config JSON");
      cmd->add_option("--seed", common.seed, "master seed override");
      cmd->add_option("--out", common.out_dir, "output directory");
    };

    CLI::App* topo = app.add_subcommand("topo", "generate topology and gains");
    add_common(topo);

    CLI::App* rates = app.add_subcommand("rates", "build the cluster catalog");
    add_common(rates);

    bool with_kkt = false;
    CLI::App* solve = app.add_subcommand("solve", "solve the NUM");
    add_common(solve);
    solve->add_flag("--kkt", with_kkt, "report KKT residuals");

    CLI::App* schedule =
        app.add_subcommand("schedule", "run the VQ greedy scheduler");
    add_common(schedule);

    std::string oracle_precoder = "zf";
    int oracle_m = 100;
    std::string oracle_s = "1:10";
    std::string oracle_cluster = "0";
    std::string oracle_beta = "1.0";
    std::string oracle_power;
    double oracle_noise = 1.0;
    int oracle_trials = 1000;
    std::uint64_t oracle_seed = 1;
    std::string oracle_out;
    CLI::App* oracle =
        app.add_subcommand("oracle", "Monte Carlo check of a peak-rate proxy");
    oracle->add_option("--precoder", oracle_precoder, "zf or mrt");
    oracle->add_option("--m", oracle_m, "antennas per BS");
    oracle->add_option("--s", oracle_s, "budget: slope or L:S[,L:S...]");
    oracle->add_option("--cluster", oracle_cluster, "member ids, e.g. 0;1");
    oracle->add_option("--beta", oracle_beta, "probe gains, comma separated");
    oracle->add_option("--power", oracle_power, "per-BS powers (default 1)");
    oracle->add_option("--noise", oracle_noise, "noise power (watts)");
    oracle->add_option("--trials", oracle_trials, "Monte Carlo trials");
    oracle->add_option("--seed", oracle_seed, "RNG seed");
    oracle->add_option("--out", oracle_out, "write the JSON report here");

    double grid_step = 0.02;
    std::int64_t grid_leaves = 4'000'000'000;
    CLI::App* num_oracle = app.add_subcommand(
        "num-oracle", "exhaustive grid search for tiny NUM instances");
    add_common(num_oracle);
    num_oracle->add_option("--step", grid_step, "grid step (divides 1)");
    num_oracle->add_option("--max-leaves", grid_leaves, "grid point budget");

    std::string scenario = "shared";
    std::optional<std::string> scheme;
    int repeat = 1;
    CLI::App* pipeline =
        app.add_subcommand("pipeline", "full experiment pipeline");
    add_common(pipeline);
    pipeline->add_option("--scenario", scenario, "shared, split or both")
        ->check(CLI::IsMember({"shared", "split", "both"}));
    pipeline->add_option("--scheme", scheme, "emit only this scheme");
    pipeline->add_option("--repeat", repeat, "number of independent runs")
        ->check(CLI::PositiveNumber);

    std::string report_rates;
    std::string report_out;
    CLI::App* report =
        app.add_subcommand("report", "recompute metrics from a rates CSV");
    report->add_option("--rates", report_rates, "rates.csv path")->required();
    report->add_option("--out", report_out, "write the JSON report here");

    CLI11_PARSE(app, argc, argv);

    if (topo->parsed()) return stage = "topo", run_topo(common);
    if (rates->parsed()) return stage = "rates", run_rates(common);
    if (solve->parsed()) return stage = "solve", run_solve(common, with_kkt);
    if (schedule->parsed()) return stage = "schedule", run_schedule_cmd(common);
    if (oracle->parsed()) {
      stage = "oracle";
      return run_oracle(oracle_precoder, oracle_m, oracle_s, oracle_cluster,
                        oracle_beta, oracle_power, oracle_noise, oracle_trials,
                        oracle_seed, oracle_out);
    }
    if (num_oracle->parsed()) {
      stage = "num-oracle";
      return run_num_oracle(common, grid_step, grid_leaves);
    }
    if (pipeline->parsed()) {
      stage = "pipeline";
      return run_pipeline_cmd(common, scenario, scheme, repeat);
    }
    if (report->parsed()) return stage = "report", run_report(report_rates, report_out);
  } catch (const std::exception& e) {
    std::cerr << '[' << stage << "] error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
