#include <doctest.h>

#include <cmath>

#include "dmimo/rates.hpp"
#include "dmimo/rng.hpp"
#include "test_util.hpp"

using namespace dmimo;
using test::make_gains;
using test::make_stations;

TEST_CASE("beam gain factor") {
  CHECK(beam_gain(100, 10) == doctest::Approx(9.1).epsilon(1e-12));
  CHECK(beam_gain(100, 20) == doctest::Approx(4.05).epsilon(1e-12));
  CHECK(beam_gain(64, 64) == doctest::Approx(1.0 / 64).epsilon(1e-12));
  CHECK_THROWS(beam_gain(100, 0));
  CHECK_THROWS(beam_gain(100, 101));
}

TEST_CASE("ZF peak rate: single BS") {
  const auto stations = make_stations(1, 100, {{1, 10}});
  const auto gains = make_gains({{1.0}});
  const double rate = zf_peak_rate(0, Cluster({0}), gains, stations);
  CHECK(rate == doctest::Approx(std::log2(1.0 + 9.1)).epsilon(1e-12));
  CHECK(rate == doctest::Approx(3.3363).epsilon(1e-4));
}

TEST_CASE("ZF peak rate: zero gain on every cluster link") {
  const auto stations = make_stations(1, 100, {{1, 10}});
  const auto gains = make_gains({{0.0}});
  CHECK(zf_peak_rate(0, Cluster({0}), gains, stations) == 0.0);
}

TEST_CASE("ZF peak rate: symmetric two-BS cluster") {
  const auto stations = make_stations(2, 100, {{1, 10}, {2, 20}});
  const auto gains = make_gains({{1.0, 1.0}});
  const double rate = zf_peak_rate(0, Cluster({0, 1}), gains, stations);
  // Numerator collapses to (2 sqrt(b(2)))^2 = 4 * 4.05.
  CHECK(rate == doctest::Approx(std::log2(1.0 + 16.2)).epsilon(1e-12));
  CHECK(rate == doctest::Approx(4.1043).epsilon(1e-4));
}

TEST_CASE("MRT peak rate: single BS with intra-cluster interference") {
  const auto stations = make_stations(1, 100, {{1, 10}});
  const auto gains = make_gains({{1.0}});
  const double rate = mrt_peak_rate(0, Cluster({0}), gains, stations);
  CHECK(rate == doctest::Approx(std::log2(1.0 + 10.0 / 1.9)).epsilon(1e-12));
  CHECK(rate == doctest::Approx(2.6469).epsilon(1e-4));
}

TEST_CASE("MRT peak rate: out-of-cluster interference enters the denominator") {
  const auto stations = make_stations(2, 100, {{1, 10}});
  const auto gains = make_gains({{1.0, 1.0}});
  const double rate = mrt_peak_rate(0, Cluster({0}), gains, stations);
  CHECK(rate == doctest::Approx(std::log2(1.0 + 10.0 / 2.9)).epsilon(1e-12));
  CHECK(rate == doctest::Approx(2.1532).epsilon(1e-4));
  const auto zero = make_gains({{0.0, 0.0}});
  CHECK(mrt_peak_rate(0, Cluster({0}), zero, stations) == 0.0);
}

TEST_CASE("candidate enumeration") {
  const auto stations = make_stations(3, 100, {{1, 10}, {2, 20}});
  const auto gains = make_gains({{5.0, 3.0, 1.0}});

  SUBCASE("strongest mode returns the top-L set per size") {
    const auto c = enumerate_candidates(0, gains, stations, 2, 2);
    REQUIRE(c[1].size() == 1);
    CHECK(c[1][0] == Cluster({0}));
    REQUIRE(c[2].size() == 1);
    CHECK(c[2][0] == Cluster({0, 1}));
  }
  SUBCASE("rich mode returns all subsets of the strongest set") {
    const auto c =
        enumerate_candidates(0, gains, stations, 2, 3, CandidateMode::kRich);
    CHECK(c[1].size() == 3);
    REQUIRE(c[2].size() == 3);
    CHECK(c[2][0] == Cluster({0, 1}));
    CHECK(c[2][1] == Cluster({0, 2}));
    CHECK(c[2][2] == Cluster({1, 2}));
  }
  SUBCASE("degenerate network: no size-2 candidate with one BS") {
    const auto one = make_stations(1, 100, {{1, 10}, {2, 20}});
    const auto g = make_gains({{5.0}});
    const auto c = enumerate_candidates(0, g, one, 2, 2);
    CHECK(c[1].size() == 1);
    CHECK(c[2].empty());
  }
  SUBCASE("n_strongest below l_max is rejected") {
    CHECK_THROWS(enumerate_candidates(0, gains, stations, 2, 1));
  }
}

TEST_CASE("catalog: size-1 build reproduces the cellular peak rates") {
  const auto stations = make_stations(3, 100, {{1, 10}});
  const auto gains = make_gains({{2.0, 0.5, 0.1}, {0.3, 1.5, 0.2}});
  const ClusterCatalog catalog =
      build_catalog(gains, stations, Precoder::kZf, 1);
  for (const CatalogEntry& entry : catalog.entries()) {
    CHECK(entry.rate ==
          zf_peak_rate(entry.user, entry.cluster, gains, stations));
  }
}

TEST_CASE("catalog entries are nonnegative and finite") {
  const auto stations = make_stations(4, 100, {{1, 10}, {2, 20}});
  SplitMix64 rng(99);
  std::vector<std::vector<double>> beta(6, std::vector<double>(4));
  for (auto& row : beta) {
    for (double& b : row) b = rng.next_double(1e-6, 5.0);
  }
  for (const Precoder precoder : {Precoder::kZf, Precoder::kMrt}) {
    const ClusterCatalog catalog =
        build_catalog(make_gains(beta), stations, precoder, 2,
                      CandidateMode::kRich, 3);
    for (const CatalogEntry& entry : catalog.entries()) {
      CHECK(entry.rate >= 0.0);
      CHECK(std::isfinite(entry.rate));
    }
  }
}

TEST_CASE("enlarging a cluster with a far BS lowers the ZF rate") {
  // S(2) > S(1) splits the array harder while the far BS contributes nothing.
  const auto stations = make_stations(2, 100, {{1, 10}, {2, 20}});
  const auto gains = make_gains({{1.0, 1e-30}});
  const double single = zf_peak_rate(0, Cluster({0}), gains, stations);
  const double pair = zf_peak_rate(0, Cluster({0, 1}), gains, stations);
  CHECK(single ==
        doctest::Approx(std::log2(1.0 + 9.1 / (1.0 + 1e-30))).epsilon(1e-12));
  CHECK(pair < single);
}

TEST_CASE("monotonicity in the gains") {
  const auto stations = make_stations(3, 100, {{1, 10}, {2, 20}});
  SplitMix64 rng(5);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> beta = {rng.next_double(0.1, 5.0),
                                rng.next_double(0.1, 5.0),
                                rng.next_double(0.1, 5.0)};
    const Cluster pair({0, 1});
    const auto base = make_gains({beta});

    // Raising an in-cluster gain never lowers the ZF rate.
    auto up = beta;
    up[0] *= 1.0 + rng.next_double(0.01, 1.0);
    CHECK(zf_peak_rate(0, pair, make_gains({up}), stations) >=
          zf_peak_rate(0, pair, base, stations));
    // Raising an out-of-cluster gain never raises either rate.
    auto interf = beta;
    interf[2] *= 1.0 + rng.next_double(0.01, 1.0);
    CHECK(zf_peak_rate(0, pair, make_gains({interf}), stations) <=
          zf_peak_rate(0, pair, base, stations));
    CHECK(mrt_peak_rate(0, pair, make_gains({interf}), stations) <=
          mrt_peak_rate(0, pair, base, stations));
  }
}

TEST_CASE("ZF beats MRT on the single-BS reference instance") {
  const auto stations = make_stations(1, 100, {{1, 10}});
  const auto gains = make_gains({{1.0}});
  CHECK(zf_peak_rate(0, Cluster({0}), gains, stations) >
        mrt_peak_rate(0, Cluster({0}), gains, stations));
}

TEST_CASE("SINR is invariant to a common power/noise rescale") {
  const auto gains = make_gains({{2.0, 0.3, 0.4}}, 1.0);
  auto stations = make_stations(3, 100, {{1, 10}, {2, 20}});
  const Cluster pair({0, 1});
  const double base_zf = zf_peak_rate(0, pair, gains, stations);
  const double base_mrt = mrt_peak_rate(0, pair, gains, stations);

  auto scaled = make_gains({{2.0, 0.3, 0.4}}, 1.0 * 977.5);
  for (BaseStation& bs : stations) bs.tx_power_w *= 977.5;
  CHECK(zf_peak_rate(0, pair, scaled, stations) ==
        doctest::Approx(base_zf).epsilon(1e-12));
  CHECK(mrt_peak_rate(0, pair, scaled, stations) ==
        doctest::Approx(base_mrt).epsilon(1e-12));
}

TEST_CASE("cluster invariants") {
  CHECK_THROWS(Cluster({1, 1}));
  CHECK(Cluster({3, 1}).members == std::vector<int>{1, 3});
  CHECK(Cluster({1, 2}) < Cluster({1, 3}));
  CHECK(Cluster({1, 2}).label() == "1;2");
  const auto stations = make_stations(1, 100, {{1, 10}});
  const auto gains = make_gains({{1.0}});
  CHECK_THROWS(zf_peak_rate(0, Cluster{}, gains, stations));
}
