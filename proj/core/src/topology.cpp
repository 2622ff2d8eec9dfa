#include "dmimo/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dmimo/rng.hpp"
#include "dmimo/units.hpp"

namespace dmimo {

const char* tier_name(Tier tier) {
  return tier == Tier::kMacro ? "macro" : "pico";
}

int BudgetRule::operator()(int cluster_size) const {
  if (cluster_size < 1) throw std::invalid_argument("cluster size must be >= 1");
  if (!table.empty()) {
    const auto it = table.find(cluster_size);
    if (it == table.end()) {
      throw std::invalid_argument("no budget entry for cluster size " +
                                  std::to_string(cluster_size));
    }
    return it->second;
  }
  if (slope < 1) throw std::invalid_argument("budget slope must be >= 1");
  return slope * cluster_size;
}

void validate_budget(const BaseStation& bs, int l_max) {
  const int s1 = bs.users_per_rb(1);
  for (int l = 1; l <= l_max; ++l) {
    const int sl = bs.users_per_rb(l);
    if (sl < s1 || sl > l * s1) {
      throw std::invalid_argument("BS " + std::to_string(bs.id) +
                                  ": S(L) must satisfy S(1) <= S(L) <= L*S(1)");
    }
    if (sl > bs.antennas) {
      throw std::invalid_argument("BS " + std::to_string(bs.id) +
                                  ": S(L) exceeds antenna count");
    }
  }
  if (bs.tx_power_w <= 0.0) {
    throw std::invalid_argument("BS " + std::to_string(bs.id) +
                                ": tx power must be positive");
  }
}

CheckerboardConfig paper_checkerboard() {
  CheckerboardConfig cfg;
  cfg.extent_m = 2000.0;
  cfg.grid = 6;
  cfg.shaded_anchors = {{1, 1}, {1, 4}, {4, 1}, {4, 4}};
  cfg.shaded_block = 2;
  cfg.picos_per_shaded = 3;
  cfg.users_per_white = 15;
  cfg.users_per_shaded = 90;
  return cfg;
}

CheckerboardConfig desk_checkerboard() {
  CheckerboardConfig cfg;
  cfg.extent_m = 1000.0;
  cfg.grid = 3;
  cfg.shaded_anchors = {{1, 1}};
  cfg.shaded_block = 1;
  cfg.picos_per_shaded = 0;
  cfg.users_per_white = 15;
  cfg.users_per_shaded = 90;
  return cfg;
}

namespace {

void validate_config(const CheckerboardConfig& cfg) {
  if (cfg.extent_m <= 0.0) throw std::invalid_argument("extent must be positive");
  if (cfg.grid < 1) throw std::invalid_argument("grid must be >= 1");
  if (cfg.shaded_block < 1) throw std::invalid_argument("shaded block must be >= 1");
  if (cfg.picos_per_shaded < 0 || cfg.users_per_white < 0 ||
      cfg.users_per_shaded < 0) {
    throw std::invalid_argument("counts must be nonnegative");
  }
  std::set<std::pair<int, int>> covered;
  for (const auto& [row, col] : cfg.shaded_anchors) {
    if (row < 0 || col < 0 || row + cfg.shaded_block > cfg.grid ||
        col + cfg.shaded_block > cfg.grid) {
      throw std::invalid_argument("shaded square outside the grid");
    }
    for (int r = row; r < row + cfg.shaded_block; ++r) {
      for (int c = col; c < col + cfg.shaded_block; ++c) {
        if (!covered.insert({r, c}).second) {
          throw std::invalid_argument("shaded squares overlap");
        }
      }
    }
  }
}

}  // namespace

Layout build_checkerboard(const CheckerboardConfig& cfg, std::uint64_t seed) {
  validate_config(cfg);
  const double cell = cfg.extent_m / cfg.grid;
  const double block = cell * cfg.shaded_block;

  std::set<std::pair<int, int>> shaded_cells;
  for (const auto& [row, col] : cfg.shaded_anchors) {
    for (int r = row; r < row + cfg.shaded_block; ++r) {
      for (int c = col; c < col + cfg.shaded_block; ++c) {
        shaded_cells.insert({r, c});
      }
    }
  }

  Layout layout;
  layout.extent_m = cfg.extent_m;
  SplitMix64 rng(mix64(seed, 0x746f706fULL));  // placement stream

  int bs_id = 0;
  // Macros at the shaded-square centers.
  for (const auto& [row, col] : cfg.shaded_anchors) {
    BaseStation bs;
    bs.id = bs_id++;
    bs.position = {col * cell + block / 2.0, row * cell + block / 2.0};
    bs.tier = Tier::kMacro;
    bs.tx_power_w = dbm_to_watts(cfg.macro.tx_power_dbm);
    bs.antennas = cfg.macro.antennas;
    bs.budget = cfg.macro.budget;
    layout.stations.push_back(bs);
  }
  // One pico at the center of every white cell.
  for (int r = 0; r < cfg.grid; ++r) {
    for (int c = 0; c < cfg.grid; ++c) {
      if (shaded_cells.count({r, c})) continue;
      BaseStation bs;
      bs.id = bs_id++;
      bs.position = {(c + 0.5) * cell, (r + 0.5) * cell};
      bs.tier = Tier::kPico;
      bs.tx_power_w = dbm_to_watts(cfg.pico.tx_power_dbm);
      bs.antennas = cfg.pico.antennas;
      bs.budget = cfg.pico.budget;
      layout.stations.push_back(bs);
    }
  }
  // Random picos inside each shaded square.
  for (const auto& [row, col] : cfg.shaded_anchors) {
    for (int i = 0; i < cfg.picos_per_shaded; ++i) {
      BaseStation bs;
      bs.id = bs_id++;
      bs.position = {col * cell + rng.next_double(0.0, block),
                     row * cell + rng.next_double(0.0, block)};
      bs.tier = Tier::kPico;
      bs.tx_power_w = dbm_to_watts(cfg.pico.tx_power_dbm);
      bs.antennas = cfg.pico.antennas;
      bs.budget = cfg.pico.budget;
      layout.stations.push_back(bs);
    }
  }

  int user_id = 0;
  for (int r = 0; r < cfg.grid; ++r) {
    for (int c = 0; c < cfg.grid; ++c) {
      if (shaded_cells.count({r, c})) continue;
      for (int i = 0; i < cfg.users_per_white; ++i) {
        layout.users.push_back({user_id++,
                                {c * cell + rng.next_double(0.0, cell),
                                 r * cell + rng.next_double(0.0, cell)}});
      }
    }
  }
  for (const auto& [row, col] : cfg.shaded_anchors) {
    for (int i = 0; i < cfg.users_per_shaded; ++i) {
      layout.users.push_back({user_id++,
                              {col * cell + rng.next_double(0.0, block),
                               row * cell + rng.next_double(0.0, block)}});
    }
  }
  return layout;
}

double pathloss_db(Tier tier, double distance_km) {
  if (distance_km <= 0.0) throw std::invalid_argument("distance must be positive");
  if (tier == Tier::kMacro) return 128.1 + 37.6 * std::log10(distance_km);
  return 140.7 + 36.7 * std::log10(distance_km);
}

double torus_distance(const Vec2& a, const Vec2& b, double extent_m) {
  double dx = std::fabs(a.x - b.x);
  double dy = std::fabs(a.y - b.y);
  dx = std::fmod(dx, extent_m);
  dy = std::fmod(dy, extent_m);
  dx = std::min(dx, extent_m - dx);
  dy = std::min(dy, extent_m - dy);
  return std::hypot(dx, dy);
}

LinkGainMap compute_link_gains(const std::vector<BaseStation>& stations,
                               const std::vector<User>& users, double extent_m,
                               const GainConfig& config, std::uint64_t seed) {
  const int num_users = static_cast<int>(users.size());
  const int num_bs = static_cast<int>(stations.size());
  LinkGainMap map;
  map.beta.resize(num_users, num_bs);
  map.noise_power_w = dbm_to_watts(config.noise_dbm);
  map.extent_m = extent_m;
  map.seed = seed;

  for (int k = 0; k < num_users; ++k) {
    for (int j = 0; j < num_bs; ++j) {
      const double d_m = std::max(
          config.min_distance_m,
          torus_distance(users[k].position, stations[j].position, extent_m));
      double loss_db = pathloss_db(stations[j].tier, d_m / 1000.0);
      if (config.shadowing.enabled && config.shadowing.std_db > 0.0) {
        // Stream keyed per link so the map is independent of loop order.
        SplitMix64 rng(mix64(seed, 0x73686164ULL, static_cast<std::uint64_t>(k),
                             static_cast<std::uint64_t>(j)));
        loss_db += config.shadowing.std_db * rng.next_normal();
      }
      map.beta(k, j) = db_to_linear(-loss_db);
    }
  }
  return map;
}

void LinkGainMap::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "user_id,bs_id,beta_linear\n";
  char buf[64];
  for (int k = 0; k < num_users(); ++k) {
    for (int j = 0; j < num_stations(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", beta(k, j));
      out << k << ',' << j << ',' << buf << '\n';
    }
  }
}

LinkGainMap LinkGainMap::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty gain csv");
  struct Row {
    int user, bs;
    double beta;
  };
  std::vector<Row> rows;
  int max_user = -1, max_bs = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row row{};
    char comma;
    if (!(ss >> row.user >> comma >> row.bs >> comma >> row.beta)) {
      throw std::runtime_error("malformed gain csv line: " + line);
    }
    max_user = std::max(max_user, row.user);
    max_bs = std::max(max_bs, row.bs);
    rows.push_back(row);
  }
  LinkGainMap map;
  map.beta = Eigen::MatrixXd::Zero(max_user + 1, max_bs + 1);
  for (const Row& row : rows) map.beta(row.user, row.bs) = row.beta;
  return map;
}

}  // namespace dmimo
