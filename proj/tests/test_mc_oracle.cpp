#include <doctest.h>

#include <cmath>
#include <complex>

#include "dmimo/mc_oracle.hpp"
#include "dmimo/rng.hpp"
#include "test_util.hpp"

using namespace dmimo;
using test::make_stations;

TEST_CASE("fast fading draws are reproducible and keyed") {
  const FadingModel fading(11);
  const auto a = fading.fast_fading(3, 7, 1, 16);
  const auto b = fading.fast_fading(3, 7, 1, 16);
  CHECK(a == b);
  const auto c = fading.fast_fading(4, 7, 1, 16);
  CHECK(a != c);
  const FadingModel other(12);
  CHECK(other.fast_fading(3, 7, 1, 16) != a);
}

TEST_CASE("fading entries have the CN(0,1) moments") {
  const FadingModel fading(21);
  const int draws = 4000;
  const int antennas = 8;
  double mean_re = 0.0, power = 0.0;
  for (int trial = 0; trial < draws; ++trial) {
    const auto h = fading.fast_fading(trial, 0, 0, antennas);
    for (int m = 0; m < antennas; ++m) {
      mean_re += h[m].real();
      power += std::norm(h[m]);
    }
  }
  mean_re /= draws * antennas;
  power /= draws * antennas;
  CHECK(std::fabs(mean_re) < 0.02);
  CHECK(power == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("ZF precoder properties") {
  const FadingModel fading(31);
  const int antennas = 32, users = 6;
  Eigen::MatrixXcd channels(antennas, users);
  for (int u = 0; u < users; ++u) {
    channels.col(u) = fading.channel(0, u, 0, antennas, 1.7);
  }
  const Eigen::MatrixXcd beams = zf_precoder(channels);

  SUBCASE("unit norm") {
    for (int u = 0; u < users; ++u) {
      CHECK(beams.col(u).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("zero-forcing orthogonality") {
    for (int u = 0; u < users; ++u) {
      for (int k = 0; k < users; ++k) {
        if (u == k) continue;
        CHECK(std::abs(channels.col(k).dot(beams.col(u))) <=
              1e-9 * channels.col(k).norm());
      }
    }
  }
  SUBCASE("single served user: ZF beam equals the MRT beam") {
    const Eigen::MatrixXcd one = channels.leftCols(1);
    const Eigen::MatrixXcd zf = zf_precoder(one);
    const Eigen::VectorXcd mrt = mrt_precoder(one.col(0));
    CHECK((zf.col(0) - mrt).norm() <= 1e-12);
  }
}

TEST_CASE("MRT precoder") {
  const FadingModel fading(41);
  const Eigen::VectorXcd g = fading.channel(0, 0, 0, 16, 2.5);
  const Eigen::VectorXcd f = mrt_precoder(g);
  CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((mrt_precoder(7.0 * g) - f).norm() <= 1e-12);
  CHECK_THROWS(mrt_precoder(Eigen::VectorXcd::Zero(8)));
}

TEST_CASE("per-RB SINR") {
  const FadingModel fading(51);
  const int antennas = 16;

  SUBCASE("single BS, single user, MRT: matched-filter identity") {
    const Eigen::VectorXcd g = fading.channel(0, 0, 0, antennas, 1.3);
    RbContext rb;
    rb.noise_power_w = 0.7;
    RbStation station;
    station.bs = 0;
    station.power_w = 2.0;
    station.users = {0};
    station.beams = mrt_precoder(g);
    rb.stations.push_back(station);
    rb.probe_channels.push_back(g);
    const double sinr = rb_sinr(rb, 0, Cluster({0}));
    CHECK(sinr ==
          doctest::Approx(2.0 * g.squaredNorm() / 0.7).epsilon(1e-12));
  }
  SUBCASE("ZF: intra-cell interference is numerically zero") {
    const int users = 4;
    Eigen::MatrixXcd channels(antennas, users);
    for (int u = 0; u < users; ++u) {
      channels.col(u) = fading.channel(1, u, 0, antennas, 1.0);
    }
    RbContext rb;
    rb.noise_power_w = 1.0;
    RbStation station;
    station.bs = 0;
    station.power_w = 1.0;
    station.users = {0, 1, 2, 3};
    station.beams = zf_precoder(channels);
    rb.stations.push_back(station);
    rb.probe_channels.push_back(channels.col(0));
    const double sinr = rb_sinr(rb, 0, Cluster({0}));
    const double desired =
        std::norm(channels.col(0).dot(station.beams.col(0))) / users;
    // Denominator reduces to the noise: interference is below 1e-16 relative.
    CHECK(sinr == doctest::Approx(desired / 1.0).epsilon(1e-12));
  }
  SUBCASE("unscheduled probe is rejected") {
    RbContext rb;
    rb.noise_power_w = 1.0;
    RbStation station;
    station.bs = 0;
    station.power_w = 1.0;
    station.users = {1};
    station.beams = mrt_precoder(fading.channel(2, 1, 0, antennas, 1.0));
    rb.stations.push_back(station);
    rb.probe_channels.push_back(fading.channel(2, 0, 0, antennas, 1.0));
    CHECK_THROWS(rb_sinr(rb, 0, Cluster({0})));
  }
}

TEST_CASE("proxy verification: single-cell ZF within 5 percent") {
  OracleSetup setup;
  setup.precoder = Precoder::kZf;
  setup.cluster = Cluster({0});
  setup.stations = make_stations(1, 100, {{1, 10}});
  setup.beta = {1.0};
  setup.noise_power_w = 1.0;
  setup.trials = 1000;
  setup.seed = 7;
  const OracleReport report = verify_proxy(setup);
  CHECK(report.rel_error <= 0.05);
  CHECK(report.proxy_rate == doctest::Approx(std::log2(10.1)).epsilon(1e-12));
}

TEST_CASE("proxy verification: MRT and a 2-BS ZF cluster within 7 percent") {
  SUBCASE("MRT single cell") {
    OracleSetup setup;
    setup.precoder = Precoder::kMrt;
    setup.cluster = Cluster({0});
    setup.stations = make_stations(1, 100, {{1, 10}});
    setup.beta = {1.0};
    setup.trials = 1000;
    setup.seed = 8;
    CHECK(verify_proxy(setup).rel_error <= 0.07);
  }
  SUBCASE("two-BS ZF cluster with an out-of-cluster interferer") {
    OracleSetup setup;
    setup.precoder = Precoder::kZf;
    setup.cluster = Cluster({0, 1});
    setup.stations = make_stations(3, 100, {{1, 10}, {2, 20}});
    setup.beta = {1.0, 0.6, 0.2};
    setup.trials = 1000;
    setup.seed = 9;
    CHECK(verify_proxy(setup).rel_error <= 0.07);
  }
}

TEST_CASE("scaling powers and noise together leaves the rates unchanged") {
  OracleSetup setup;
  setup.precoder = Precoder::kZf;
  setup.cluster = Cluster({0});
  setup.stations = make_stations(2, 64, {{1, 8}});
  setup.beta = {1.0, 0.4};
  setup.trials = 200;
  setup.seed = 10;
  const OracleReport base = verify_proxy(setup);

  for (BaseStation& bs : setup.stations) bs.tx_power_w *= 10.0;
  setup.noise_power_w *= 10.0;
  const OracleReport scaled = verify_proxy(setup);
  CHECK(scaled.empirical_rate ==
        doctest::Approx(base.empirical_rate).epsilon(1e-9));
}

TEST_CASE("confidence interval shrinks like 1/sqrt(n)") {
  OracleSetup setup;
  setup.precoder = Precoder::kMrt;
  setup.cluster = Cluster({0});
  setup.stations = make_stations(1, 64, {{1, 8}});
  setup.beta = {1.0};
  setup.seed = 11;
  setup.trials = 500;
  const double h1 = verify_proxy(setup).ci_halfwidth;
  setup.trials = 2000;
  const double h2 = verify_proxy(setup).ci_halfwidth;
  CHECK(h1 / h2 == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("asymptotic trend: relative error non-increasing in M at fixed S/M") {
  double prev = 1e9;
  for (const int antennas : {64, 128, 256}) {
    OracleSetup setup;
    setup.precoder = Precoder::kZf;
    setup.cluster = Cluster({0});
    setup.stations = make_stations(1, antennas, {{1, antennas / 8}});
    setup.beta = {1.0};
    setup.trials = 20000;
    setup.seed = 12;
    const OracleReport report = verify_proxy(setup);
    CHECK(report.rel_error <= prev + 1e-4);
    prev = report.rel_error;
  }
}

TEST_CASE("MRT large-array limits hold statistically at M=256") {
  const FadingModel fading(61);
  const int antennas = 256;
  const double beta = 1.9;
  const int trials = 500;

  std::vector<double> norm_samples(trials), cross_samples(trials);
  for (int trial = 0; trial < trials; ++trial) {
    const auto g_k = fading.channel(trial, 0, 0, antennas, beta);
    const auto g_n = fading.channel(trial, 1, 0, antennas, beta);
    norm_samples[trial] = g_k.squaredNorm() / antennas;
    cross_samples[trial] = std::norm(g_k.dot(mrt_precoder(g_n)));
  }
  const auto gate = [&](const std::vector<double>& samples, double limit) {
    const double mean = pairwise_sum(samples) / trials;
    double var = 0.0;
    for (const double s : samples) var += (s - mean) * (s - mean);
    var /= trials - 1;
    const double half = 1.96 * std::sqrt(var / trials);
    CHECK(std::fabs(mean - limit) <= 3.0 * half);
  };
  gate(norm_samples, beta);   // (1/M)||g||^2 -> beta
  gate(cross_samples, beta);  // |g_k^H f_n|^2 -> beta
}

TEST_CASE("reports are invariant to the worker count") {
  OracleSetup setup;
  setup.precoder = Precoder::kZf;
  setup.cluster = Cluster({0, 1});
  setup.stations = make_stations(3, 64, {{1, 8}, {2, 12}});
  setup.beta = {1.0, 0.5, 0.2};
  setup.trials = 301;  // odd, so worker stripes differ in length
  setup.seed = 15;
  setup.threads = 1;
  const OracleReport serial = verify_proxy(setup);
  setup.threads = 4;
  const OracleReport parallel = verify_proxy(setup);
  CHECK(serial.empirical_rate == parallel.empirical_rate);
  CHECK(serial.ci_halfwidth == parallel.ci_halfwidth);
}

TEST_CASE("oracle reports are reproducible for a fixed seed") {
  OracleSetup setup;
  setup.precoder = Precoder::kZf;
  setup.cluster = Cluster({0});
  setup.stations = make_stations(2, 64, {{1, 8}});
  setup.beta = {1.0, 0.3};
  setup.trials = 300;
  setup.seed = 13;
  const OracleReport a = verify_proxy(setup);
  const OracleReport b = verify_proxy(setup);
  CHECK(a.empirical_rate == b.empirical_rate);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);
  setup.seed = 14;
  CHECK(verify_proxy(setup).empirical_rate != a.empirical_rate);
}
