#include <doctest.h>

#include <cmath>

#include "dmimo/config.hpp"
#include "dmimo/metrics.hpp"
#include "dmimo/rng.hpp"

using namespace dmimo;

TEST_CASE("geometric mean") {
  CHECK(geometric_mean({1.0, 1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(geometric_mean({2.0, 8.0}) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(geometric_mean({5.0}) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS(geometric_mean({}));
  CHECK_THROWS(geometric_mean({1.0, 0.0}));
}

TEST_CASE("geometric mean never exceeds the arithmetic mean") {
  SplitMix64 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> rates(10);
    double mean = 0.0;
    for (double& r : rates) {
      r = std::exp(rng.next_double(-2.0, 2.0));
      mean += r;
    }
    mean /= rates.size();
    CHECK(geometric_mean(rates) <= mean + 1e-12);
  }
}

TEST_CASE("lower quantile") {
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.05) == 1.0);
  CHECK(quantile({4.0, 3.0, 2.0, 1.0}, 0.75) == 3.0);
  CHECK(quantile({2.0}, 0.5) == 2.0);
  CHECK_THROWS(quantile({}, 0.5));
}

TEST_CASE("empirical CDF on a grid") {
  const auto cdf = rate_cdf({1.0, 2.0, 3.0, 4.0}, {0.5, 2.0, 5.0});
  REQUIRE(cdf.size() == 3);
  CHECK(cdf[0].second == 0.0);
  CHECK(cdf[1].second == 0.5);
  CHECK(cdf[2].second == 1.0);
  CHECK_THROWS(rate_cdf({}, {1.0}));

  const auto step = rate_cdf({2.0, 2.0, 2.0}, {1.9, 2.0, 2.1});
  CHECK(step[0].second == 0.0);
  CHECK(step[1].second == 1.0);
  CHECK(step[2].second == 1.0);
}

TEST_CASE("scheme metrics: percentiles are monotone, unserved counted") {
  const auto m = compute_scheme_metrics("s", "shared",
                                        {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(m.unserved == 1);
  CHECK(m.served == 5);
  double prev = -1.0;
  for (const auto& [p, v] : m.percentiles) {
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(m.geomean_rate <= (1.0 + 2 + 3 + 4 + 5) / 5.0);
}

TEST_CASE("config parsing") {
  const char* text = R"({
    "seed": 9,
    "topology": {"preset": "desk", "users_per_white": 4, "users_per_shaded": 10},
    "rates": {"precoder": "zf", "l_max": 2},
    "num": {"architecture": "ucs", "tol": 1e-9},
    "scheduler": {"horizon": 500}
  })";
  const ExperimentConfig config = parse_config(text);
  CHECK(config.master_seed == 9);
  CHECK(config.topology.users_per_white == 4);
  CHECK(config.l_max == 2);
  CHECK(config.horizon == 500);

  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS(parse_config(R"({"topology": {"preset": "desk"}, "bogus": 1})"));
    CHECK_THROWS(parse_config(
        R"({"topology": {"preset": "desk", "grids": 3}})"));
  }
  SUBCASE("bad enums are rejected") {
    CHECK_THROWS(parse_config(
        R"({"topology": {"preset": "desk"}, "rates": {"precoder": "dirty"}})"));
  }
  SUBCASE("stage seeds differ per stage and are stable") {
    const auto a = config_stage_seed(config, "topology");
    const auto b = config_stage_seed(config, "gains");
    CHECK(a != b);
    CHECK(a == config_stage_seed(config, "topology"));
  }
}
