#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dmimo/rng.hpp"
#include "dmimo/topology.hpp"
#include "dmimo/units.hpp"

using namespace dmimo;

TEST_CASE("budget rule: linear and table forms") {
  BudgetRule linear{10, {}};
  CHECK(linear(1) == 10);
  CHECK(linear(4) == 40);
  BudgetRule table{0, {{1, 2}, {2, 3}}};
  CHECK(table(2) == 3);
  CHECK_THROWS(table(3));
  CHECK_THROWS(linear(0));
}

TEST_CASE("budget validation enforces the admissibility rules") {
  BaseStation bs;
  bs.id = 0;
  bs.antennas = 100;
  bs.tx_power_w = 1.0;
  bs.budget = BudgetRule{10, {}};
  CHECK_NOTHROW(validate_budget(bs, 4));
  bs.budget = BudgetRule{0, {{1, 4}, {2, 3}}};  // S(2) < S(1)
  CHECK_THROWS(validate_budget(bs, 2));
  bs.budget = BudgetRule{0, {{1, 2}, {2, 5}}};  // S(2) > 2 S(1)
  CHECK_THROWS(validate_budget(bs, 2));
  bs.budget = BudgetRule{60, {}};  // S(2) = 120 > M
  CHECK_THROWS(validate_budget(bs, 2));
}

TEST_CASE("paper-scale checkerboard counts") {
  const Layout layout = build_checkerboard(paper_checkerboard(), 7);
  int macros = 0, picos = 0;
  for (const BaseStation& bs : layout.stations) {
    if (bs.tier == Tier::kMacro) {
      ++macros;
      CHECK(bs.antennas == 100);
      CHECK(bs.users_per_rb(4) == 40);
    } else {
      ++picos;
      CHECK(bs.antennas == 40);
      CHECK(bs.users_per_rb(4) == 16);
    }
  }
  CHECK(macros == 4);
  CHECK(picos == 32);
  CHECK(layout.users.size() == 20u * 15 + 4u * 90);
  for (const User& user : layout.users) {
    CHECK(user.position.x >= 0.0);
    CHECK(user.position.x < layout.extent_m);
    CHECK(user.position.y >= 0.0);
    CHECK(user.position.y < layout.extent_m);
  }
}

TEST_CASE("desk-scale checkerboard counts follow the config arithmetic") {
  const Layout layout = build_checkerboard(desk_checkerboard(), 3);
  int macros = 0, picos = 0;
  for (const BaseStation& bs : layout.stations) {
    (bs.tier == Tier::kMacro ? macros : picos)++;
  }
  CHECK(macros == 1);
  CHECK(picos == 8);
  CHECK(layout.users.size() == 8u * 15 + 90);
}

TEST_CASE("placement is deterministic in (config, seed)") {
  const CheckerboardConfig cfg = paper_checkerboard();
  const Layout a = build_checkerboard(cfg, 42);
  const Layout b = build_checkerboard(cfg, 42);
  REQUIRE(a.users.size() == b.users.size());
  for (std::size_t i = 0; i < a.users.size(); ++i) {
    CHECK(a.users[i].position.x == b.users[i].position.x);
    CHECK(a.users[i].position.y == b.users[i].position.y);
  }
  const Layout c = build_checkerboard(cfg, 43);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.users.size(); ++i) {
    any_differ |= a.users[i].position.x != c.users[i].position.x;
  }
  CHECK(any_differ);
}

TEST_CASE("config validation rejects degenerate layouts") {
  CheckerboardConfig cfg = desk_checkerboard();
  cfg.extent_m = 0.0;
  CHECK_THROWS(build_checkerboard(cfg, 1));
  cfg = desk_checkerboard();
  cfg.users_per_white = -1;
  CHECK_THROWS(build_checkerboard(cfg, 1));
  cfg = desk_checkerboard();
  cfg.shaded_anchors = {{2, 2}};
  cfg.shaded_block = 2;  // hangs off the grid
  CHECK_THROWS(build_checkerboard(cfg, 1));
}

TEST_CASE("path-loss formulas") {
  CHECK(pathloss_db(Tier::kMacro, 1.0) == doctest::Approx(128.1).epsilon(1e-12));
  CHECK(pathloss_db(Tier::kMacro, 0.1) == doctest::Approx(128.1 - 37.6).epsilon(1e-12));
  CHECK(pathloss_db(Tier::kPico, 0.1) == doctest::Approx(140.7 - 36.7).epsilon(1e-12));
  CHECK_THROWS(pathloss_db(Tier::kMacro, 0.0));
}

TEST_CASE("torus distance picks the nearest image") {
  CHECK(torus_distance({10.0, 0.0}, {1990.0, 0.0}, 2000.0) ==
        doctest::Approx(20.0).epsilon(1e-12));
  CHECK(torus_distance({0.0, 0.0}, {1000.0, 0.0}, 2000.0) ==
        doctest::Approx(1000.0).epsilon(1e-12));
}

namespace {

std::vector<BaseStation> single_macro() {
  BaseStation bs;
  bs.id = 0;
  bs.position = {0.0, 0.0};
  bs.tier = Tier::kMacro;
  bs.tx_power_w = dbm_to_watts(46.0);
  bs.antennas = 100;
  bs.budget = BudgetRule{10, {}};
  return {bs};
}

}  // namespace

TEST_CASE("link gain at exactly 1 km matches the closed form") {
  const std::vector<User> users = {{0, {1000.0, 0.0}}};
  const LinkGainMap gains =
      compute_link_gains(single_macro(), users, 4000.0, GainConfig{}, 1);
  CHECK(gains.beta(0, 0) ==
        doctest::Approx(std::pow(10.0, -12.81)).epsilon(1e-12));
}

TEST_CASE("wrap-around uses the minimum image for gains") {
  const std::vector<User> users = {{0, {10.0, 0.0}}};
  std::vector<BaseStation> stations = single_macro();
  stations[0].position = {1990.0, 0.0};
  const LinkGainMap gains =
      compute_link_gains(stations, users, 2000.0, GainConfig{}, 1);
  // 20 m with the 10 m floor applied -> path loss at 0.02 km.
  const double expected = std::pow(10.0, -pathloss_db(Tier::kMacro, 0.02) / 10.0);
  CHECK(gains.beta(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero-std shadowing equals the path-loss-only map") {
  const Layout layout = build_checkerboard(desk_checkerboard(), 5);
  GainConfig off;
  GainConfig zero;
  zero.shadowing.enabled = true;
  zero.shadowing.std_db = 0.0;
  const LinkGainMap a =
      compute_link_gains(layout.stations, layout.users, layout.extent_m, off, 9);
  const LinkGainMap b = compute_link_gains(layout.stations, layout.users,
                                           layout.extent_m, zero, 9);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("beta strictly decreases with wrap-around distance") {
  const std::vector<BaseStation> stations = single_macro();
  SplitMix64 rng(123);
  double prev_beta = 1e9;
  for (double d = 20.0; d < 1900.0; d += rng.next_double(10.0, 120.0)) {
    const std::vector<User> users = {{0, {d, 0.0}}};
    const LinkGainMap gains =
        compute_link_gains(stations, users, 4000.0, GainConfig{}, 1);
    CHECK(gains.beta(0, 0) < prev_beta);
    prev_beta = gains.beta(0, 0);
  }
}

TEST_CASE("translating every position leaves the gain map unchanged") {
  Layout layout = build_checkerboard(desk_checkerboard(), 11);
  const LinkGainMap base = compute_link_gains(
      layout.stations, layout.users, layout.extent_m, GainConfig{}, 2);
  const double offset = 333.25;
  const auto shift = [&](Vec2& p) {
    p.x = std::fmod(p.x + offset, layout.extent_m);
    p.y = std::fmod(p.y + offset, layout.extent_m);
  };
  for (BaseStation& bs : layout.stations) shift(bs.position);
  for (User& user : layout.users) shift(user.position);
  const LinkGainMap shifted = compute_link_gains(
      layout.stations, layout.users, layout.extent_m, GainConfig{}, 2);
  for (int k = 0; k < base.num_users(); ++k) {
    for (int j = 0; j < base.num_stations(); ++j) {
      CHECK(shifted.beta(k, j) ==
            doctest::Approx(base.beta(k, j)).epsilon(1e-9));
    }
  }
}

TEST_CASE("dBm / watts round trip") {
  SplitMix64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const double dbm = rng.next_double(-120.0, 50.0);
    CHECK(watts_to_dbm(dbm_to_watts(dbm)) ==
          doctest::Approx(dbm).epsilon(1e-12));
  }
}

TEST_CASE("gain map CSV round trip is exact") {
  const Layout layout = build_checkerboard(desk_checkerboard(), 17);
  const LinkGainMap gains = compute_link_gains(
      layout.stations, layout.users, layout.extent_m, GainConfig{}, 3);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dmimo_gains_test.csv").string();
  gains.save_csv(path);
  const LinkGainMap loaded = LinkGainMap::load_csv(path);
  REQUIRE(loaded.num_users() == gains.num_users());
  REQUIRE(loaded.num_stations() == gains.num_stations());
  CHECK((loaded.beta - gains.beta).cwiseAbs().maxCoeff() == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("pairwise sum is order-stable and exact on integers") {
  std::vector<double> values(1000, 0.25);
  CHECK(pairwise_sum(values) == doctest::Approx(250.0).epsilon(1e-15));
}
