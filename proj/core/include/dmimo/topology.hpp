#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dmimo {

enum class Tier { kMacro, kPico };

const char* tier_name(Tier tier);

// Per-RB multiplexing budget S(L): how many users a BS may serve on an RB
// when it participates in size-L clusters. Either the linear rule
// S(L) = slope * L or an explicit per-L table.
struct BudgetRule {
  int slope = 0;
  std::map<int, int> table;

  int operator()(int cluster_size) const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct BaseStation {
  int id = 0;
  Vec2 position;
  Tier tier = Tier::kMacro;
  double tx_power_w = 0.0;
  int antennas = 0;
  BudgetRule budget;

  // S_j(L), checked against the admissibility rules at construction time.
  int users_per_rb(int cluster_size) const { return budget(cluster_size); }
};

struct User {
  int id = 0;
  Vec2 position;
};

// S(1) <= S(L) <= L*S(1) and S(L) <= M for all L up to l_max; throws
// std::invalid_argument on violation.
void validate_budget(const BaseStation& bs, int l_max);

struct TierParams {
  double tx_power_dbm = 0.0;
  int antennas = 0;
  BudgetRule budget;
};

// Wrap-around checkerboard: the extent x extent torus is divided into a
// grid x grid lattice of unit cells. Shaded squares are block x block groups
// of cells anchored at the listed (row, col) cells; every other cell is
// white. One macro sits at the center of each shaded square, one pico at the
// center of each white cell, picos_per_shaded more picos are dropped
// uniformly in each shaded square, and users are dropped uniformly per white
// cell / per shaded square.
struct CheckerboardConfig {
  double extent_m = 1000.0;
  int grid = 3;
  std::vector<std::pair<int, int>> shaded_anchors = {{1, 1}};
  int shaded_block = 1;
  int picos_per_shaded = 0;
  int users_per_white = 15;
  int users_per_shaded = 90;
  TierParams macro{46.0, 100, BudgetRule{10, {}}};
  TierParams pico{35.0, 40, BudgetRule{4, {}}};
};

// Paper-style 2000 m layout: 6x6 cells, four 2x2 shaded squares, 3 random
// picos and 90 users per shaded square, 15 users per white cell.
CheckerboardConfig paper_checkerboard();

// Small layout for quick runs: 3x3 cells with the center cell shaded.
CheckerboardConfig desk_checkerboard();

struct Layout {
  std::vector<BaseStation> stations;
  std::vector<User> users;
  double extent_m = 0.0;
};

Layout build_checkerboard(const CheckerboardConfig& config, std::uint64_t seed);

// Distance-based path loss in dB with d in km:
//   macro: 128.1 + 37.6 log10(d)    pico: 140.7 + 36.7 log10(d)
double pathloss_db(Tier tier, double distance_km);

// Shortest distance on the wrap-around square.
double torus_distance(const Vec2& a, const Vec2& b, double extent_m);

struct ShadowingConfig {
  bool enabled = false;
  double std_db = 0.0;
};

struct GainConfig {
  ShadowingConfig shadowing;
  double noise_dbm = -104.0;  // about a 10 MHz thermal floor
  double min_distance_m = 10.0;
};

// Slow-fading link gains for every user-BS pair.
struct LinkGainMap {
  Eigen::MatrixXd beta;  // K x J, linear power gain
  double noise_power_w = 0.0;
  double extent_m = 0.0;
  std::uint64_t seed = 0;

  int num_users() const { return static_cast<int>(beta.rows()); }
  int num_stations() const { return static_cast<int>(beta.cols()); }

  void save_csv(const std::string& path) const;  // user_id, bs_id, beta_linear
  static LinkGainMap load_csv(const std::string& path);
};

LinkGainMap compute_link_gains(const std::vector<BaseStation>& stations,
                               const std::vector<User>& users, double extent_m,
                               const GainConfig& config, std::uint64_t seed);

}  // namespace dmimo
