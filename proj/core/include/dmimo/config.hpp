#pragma once

#include <cstdint>
#include <string>

#include "dmimo/num.hpp"
#include "dmimo/rates.hpp"
#include "dmimo/scheduler.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

// One experiment: topology generation, catalog construction, NUM solve,
// RB-level scheduling and reporting. Parsed from a JSON key/value tree with
// strict schema checking (unknown keys are rejected).
struct ExperimentConfig {
  std::uint64_t master_seed = 1;

  CheckerboardConfig topology;
  GainConfig gains;

  Precoder precoder = Precoder::kZf;
  int l_max = 4;
  CandidateMode candidate_mode = CandidateMode::kStrongest;
  int n_strongest = 0;  // 0 = l_max

  Architecture architecture = Architecture::kUcs;
  double rho = 0.2;  // macro RB share in the split scenario
  double tol = 1e-9;

  int horizon = 10000;
  VqParams vq;

  bool oracle_enabled = false;
  int oracle_trials = 1000;

  std::string out_dir = "out";
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Per-stage sub-seeds fan out from the master seed; stage names are
// "topology", "gains", "oracle", "run:<i>".
std::uint64_t config_stage_seed(const ExperimentConfig& config,
                                const std::string& stage);

}  // namespace dmimo
