#include "dmimo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dmimo/rng.hpp"

namespace dmimo {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown key \"" + key + "\" in " + where);
    }
  }
}

BudgetRule parse_budget(const json& tier, const std::string& where) {
  BudgetRule rule;
  if (tier.contains("budget_slope")) {
    rule.slope = tier.at("budget_slope").get<int>();
  }
  if (tier.contains("budget_table")) {
    for (const auto& [key, value] : tier.at("budget_table").items()) {
      rule.table[std::stoi(key)] = value.get<int>();
    }
  }
  if (rule.slope == 0 && rule.table.empty()) {
    throw std::invalid_argument(where + ": budget_slope or budget_table required");
  }
  return rule;
}

TierParams parse_tier(const json& tier, const std::string& where) {
  reject_unknown(tier, where,
                 {"tx_power_dbm", "antennas", "budget_slope", "budget_table"});
  TierParams params;
  params.tx_power_dbm = tier.at("tx_power_dbm").get<double>();
  params.antennas = tier.at("antennas").get<int>();
  params.budget = parse_budget(tier, where);
  return params;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text);
  reject_unknown(root, "config root",
                 {"seed", "topology", "rates", "num", "scheduler", "oracle",
                  "output"});
  ExperimentConfig config;
  if (root.contains("seed")) config.master_seed = root.at("seed").get<std::uint64_t>();

  {
    const json& topo = root.at("topology");
    reject_unknown(topo, "topology",
                   {"extent_m", "grid", "shaded", "shaded_block",
                    "picos_per_shaded", "users_per_white", "users_per_shaded",
                    "macro", "pico", "noise_dbm", "min_distance_m",
                    "shadowing", "preset"});
    if (topo.contains("preset")) {
      const std::string preset = topo.at("preset").get<std::string>();
      if (preset == "paper") {
        config.topology = paper_checkerboard();
      } else if (preset == "desk") {
        config.topology = desk_checkerboard();
      } else {
        throw std::invalid_argument("unknown topology preset " + preset);
      }
    }
    CheckerboardConfig& cb = config.topology;
    if (topo.contains("extent_m")) cb.extent_m = topo.at("extent_m").get<double>();
    if (topo.contains("grid")) cb.grid = topo.at("grid").get<int>();
    if (topo.contains("shaded")) {
      cb.shaded_anchors.clear();
      for (const auto& cell : topo.at("shaded")) {
        cb.shaded_anchors.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
      }
    }
    if (topo.contains("shaded_block")) cb.shaded_block = topo.at("shaded_block").get<int>();
    if (topo.contains("picos_per_shaded")) {
      cb.picos_per_shaded = topo.at("picos_per_shaded").get<int>();
    }
    if (topo.contains("users_per_white")) {
      cb.users_per_white = topo.at("users_per_white").get<int>();
    }
    if (topo.contains("users_per_shaded")) {
      cb.users_per_shaded = topo.at("users_per_shaded").get<int>();
    }
    if (topo.contains("macro")) cb.macro = parse_tier(topo.at("macro"), "macro");
    if (topo.contains("pico")) cb.pico = parse_tier(topo.at("pico"), "pico");
    if (topo.contains("noise_dbm")) {
      config.gains.noise_dbm = topo.at("noise_dbm").get<double>();
    }
    if (topo.contains("min_distance_m")) {
      config.gains.min_distance_m = topo.at("min_distance_m").get<double>();
    }
    if (topo.contains("shadowing")) {
      const json& sh = topo.at("shadowing");
      reject_unknown(sh, "shadowing", {"enabled", "std_db"});
      if (sh.contains("enabled")) {
        config.gains.shadowing.enabled = sh.at("enabled").get<bool>();
      }
      if (sh.contains("std_db")) {
        config.gains.shadowing.std_db = sh.at("std_db").get<double>();
      }
    }
  }

  if (root.contains("rates")) {
    const json& rates = root.at("rates");
    reject_unknown(rates, "rates",
                   {"precoder", "l_max", "candidate_mode", "n_strongest"});
    if (rates.contains("precoder")) {
      const std::string p = rates.at("precoder").get<std::string>();
      if (p == "zf") {
        config.precoder = Precoder::kZf;
      } else if (p == "mrt") {
        config.precoder = Precoder::kMrt;
      } else {
        throw std::invalid_argument("unknown precoder " + p);
      }
    }
    if (rates.contains("l_max")) config.l_max = rates.at("l_max").get<int>();
    if (rates.contains("candidate_mode")) {
      const std::string m = rates.at("candidate_mode").get<std::string>();
      if (m == "strongest") {
        config.candidate_mode = CandidateMode::kStrongest;
      } else if (m == "rich") {
        config.candidate_mode = CandidateMode::kRich;
      } else {
        throw std::invalid_argument("unknown candidate mode " + m);
      }
    }
    if (rates.contains("n_strongest")) {
      config.n_strongest = rates.at("n_strongest").get<int>();
    }
  }

  if (root.contains("num")) {
    const json& num = root.at("num");
    reject_unknown(num, "num", {"architecture", "rho", "tol"});
    if (num.contains("architecture")) {
      const std::string a = num.at("architecture").get<std::string>();
      if (a == "ucs") {
        config.architecture = Architecture::kUcs;
      } else if (a == "mcs") {
        config.architecture = Architecture::kMcs;
      } else if (a == "split") {
        config.architecture = Architecture::kSplit;
      } else {
        throw std::invalid_argument("unknown architecture " + a);
      }
    }
    if (num.contains("rho")) config.rho = num.at("rho").get<double>();
    if (num.contains("tol")) config.tol = num.at("tol").get<double>();
  }

  if (root.contains("scheduler")) {
    const json& sched = root.at("scheduler");
    reject_unknown(sched, "scheduler",
                   {"horizon", "a_max", "v_factor", "record_queue_trace"});
    if (sched.contains("horizon")) config.horizon = sched.at("horizon").get<int>();
    if (sched.contains("a_max")) config.vq.a_max = sched.at("a_max").get<double>();
    if (sched.contains("v_factor")) {
      config.vq.v_factor = sched.at("v_factor").get<double>();
    }
    if (sched.contains("record_queue_trace")) {
      config.vq.record_queue_trace = sched.at("record_queue_trace").get<bool>();
    }
  }

  if (root.contains("oracle")) {
    const json& oracle = root.at("oracle");
    reject_unknown(oracle, "oracle", {"enabled", "trials"});
    if (oracle.contains("enabled")) {
      config.oracle_enabled = oracle.at("enabled").get<bool>();
    }
    if (oracle.contains("trials")) {
      config.oracle_trials = oracle.at("trials").get<int>();
    }
  }

  if (root.contains("output")) {
    const json& output = root.at("output");
    reject_unknown(output, "output", {"dir"});
    if (output.contains("dir")) config.out_dir = output.at("dir").get<std::string>();
  }

  if (config.l_max < 1) throw std::invalid_argument("l_max must be >= 1");
  if (config.horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (!(config.rho > 0.0) || config.rho > 1.0) {
    throw std::invalid_argument("rho must be in (0, 1]");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::uint64_t config_stage_seed(const ExperimentConfig& config,
                                const std::string& stage) {
  return stage_seed(config.master_seed, stage);
}

}  // namespace dmimo
