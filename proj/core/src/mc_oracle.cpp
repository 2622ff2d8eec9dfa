#include "dmimo/mc_oracle.hpp"

#include <atomic>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "dmimo/rng.hpp"

namespace dmimo {

Eigen::VectorXcd FadingModel::fast_fading(int trial, int user, int bs,
                                          int antennas, int attempt) const {
  SplitMix64 rng(mix64(seed_ ^ (0xfadeULL + attempt),
                       static_cast<std::uint64_t>(trial),
                       static_cast<std::uint64_t>(user),
                       static_cast<std::uint64_t>(bs)));
  Eigen::VectorXcd h(antennas);
  for (int m = 0; m < antennas; ++m) {
    const auto [re, im] = rng.next_cnormal();
    h[m] = std::complex<double>(re, im);
  }
  return h;
}

Eigen::VectorXcd FadingModel::channel(int trial, int user, int bs, int antennas,
                                      double beta, int attempt) const {
  return std::sqrt(beta) * fast_fading(trial, user, bs, antennas, attempt);
}

Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& channels) {
  const int num_users = static_cast<int>(channels.cols());
  const Eigen::MatrixXcd gram = channels.adjoint() * channels;
  const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("rank-deficient channel matrix");
  }
  const Eigen::MatrixXcd raw =
      channels * llt.solve(Eigen::MatrixXcd::Identity(num_users, num_users));
  Eigen::MatrixXcd beams(channels.rows(), num_users);
  for (int u = 0; u < num_users; ++u) {
    const double norm = raw.col(u).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw std::runtime_error("rank-deficient channel matrix");
    }
    beams.col(u) = raw.col(u) / norm;
  }
  return beams;
}

Eigen::VectorXcd mrt_precoder(const Eigen::VectorXcd& channel) {
  const double norm = channel.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("zero channel vector");
  return channel / norm;
}

double rb_sinr(const RbContext& rb, int probe_user, const Cluster& cluster) {
  if (cluster.size() == 0) throw std::invalid_argument("empty cluster");
  std::complex<double> desired(0.0, 0.0);
  double interference = 0.0;
  int serving = 0;
  for (std::size_t s = 0; s < rb.stations.size(); ++s) {
    const RbStation& station = rb.stations[s];
    const Eigen::VectorXcd& g = rb.probe_channels.at(s);
    const int loaded = static_cast<int>(station.users.size());
    if (loaded == 0) continue;
    const double amp = std::sqrt(station.power_w / loaded);
    const bool in_cluster = cluster.contains(station.bs);
    for (int u = 0; u < loaded; ++u) {
      const std::complex<double> rx = amp * g.dot(station.beams.col(u));
      if (station.users[u] == probe_user) {
        if (!in_cluster) {
          throw std::invalid_argument("probe served outside its cluster");
        }
        desired += rx;
        ++serving;
      } else {
        interference += std::norm(rx);
      }
    }
  }
  if (serving != cluster.size()) {
    throw std::invalid_argument("probe user is not scheduled on this RB");
  }
  return std::norm(desired) / (rb.noise_power_w + interference);
}

namespace {

constexpr int kProbeUser = 0;
constexpr int kDummyBase = 1 << 20;  // key space for per-BS dummy users
constexpr int kMaxRedraws = 10;

}  // namespace

OracleReport verify_proxy(const OracleSetup& setup) {
  const int num_stations = static_cast<int>(setup.stations.size());
  if (static_cast<int>(setup.beta.size()) != num_stations) {
    throw std::invalid_argument("beta list must match the station list");
  }
  if (setup.cluster.size() == 0) throw std::invalid_argument("empty cluster");
  if (setup.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const int cluster_size = setup.cluster.size();
  const int out_size =
      setup.out_cluster_size == 0 ? cluster_size : setup.out_cluster_size;

  // Closed-form prediction on a one-user gain map with the same geometry.
  LinkGainMap gains;
  gains.beta.resize(1, num_stations);
  for (int j = 0; j < num_stations; ++j) gains.beta(0, j) = setup.beta[j];
  gains.noise_power_w = setup.noise_power_w;
  const double proxy =
      setup.precoder == Precoder::kZf
          ? zf_peak_rate(kProbeUser, setup.cluster, gains, setup.stations)
          : mrt_peak_rate(kProbeUser, setup.cluster, gains, setup.stations);

  const FadingModel fading(setup.seed);
  std::vector<double> rates(setup.trials);
  std::atomic<int> redraws{0};

  const auto run_trial = [&](int trial) {
    RbContext rb;
    rb.noise_power_w = setup.noise_power_w;
    for (int j = 0; j < num_stations; ++j) {
      const BaseStation& bs = setup.stations[j];
      RbStation station;
      station.bs = bs.id;
      station.power_w = bs.tx_power_w;
      if (setup.cluster.contains(bs.id)) {
        const int loaded = bs.users_per_rb(cluster_size);
        Eigen::MatrixXcd channels(bs.antennas, loaded);
        station.users.push_back(kProbeUser);
        channels.col(0) =
            fading.channel(trial, kProbeUser, j, bs.antennas, setup.beta[j]);
        for (int u = 1; u < loaded; ++u) {
          station.users.push_back(kDummyBase * (j + 1) + u);
          channels.col(u) =
              fading.channel(trial, station.users[u], j, bs.antennas, 1.0);
        }
        for (int attempt = 0;; ++attempt) {
          try {
            if (setup.precoder == Precoder::kZf) {
              station.beams = zf_precoder(channels);
            } else {
              station.beams.resize(bs.antennas, loaded);
              for (int u = 0; u < loaded; ++u) {
                station.beams.col(u) = mrt_precoder(channels.col(u));
              }
            }
            break;
          } catch (const std::runtime_error&) {
            if (attempt >= kMaxRedraws) throw;
            ++redraws;
            for (int u = 0; u < loaded; ++u) {
              channels.col(u) =
                  fading.channel(trial, station.users[u], j, bs.antennas,
                                 u == 0 ? setup.beta[j] : 1.0, attempt + 1);
            }
          }
        }
        // The receiver sees the same realization the precoder was built on.
        rb.probe_channels.push_back(channels.col(0));
      } else {
        // Fully loaded interferer: random unit beams for its own users.
        const int loaded = bs.users_per_rb(out_size);
        station.beams.resize(bs.antennas, loaded);
        for (int u = 0; u < loaded; ++u) {
          station.users.push_back(kDummyBase * (j + 1) + u);
          station.beams.col(u) = mrt_precoder(
              fading.channel(trial, station.users[u], j, bs.antennas, 1.0));
        }
        rb.probe_channels.push_back(
            fading.channel(trial, kProbeUser, j, bs.antennas, setup.beta[j]));
      }
      rb.stations.push_back(std::move(station));
    }
    rates[trial] = std::log2(1.0 + rb_sinr(rb, kProbeUser, setup.cluster));
  };

  int workers = setup.threads > 0
                    ? setup.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min({workers, setup.trials, 16}));
  if (workers == 1) {
    for (int trial = 0; trial < setup.trials; ++trial) run_trial(trial);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int trial = w; trial < setup.trials; trial += workers) {
            run_trial(trial);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& thread : pool) thread.join();
    for (const std::exception_ptr& error : errors) {
      if (error) std::rethrow_exception(error);
    }
  }

  OracleReport report;
  report.n_trials = setup.trials;
  report.redraws = redraws;
  report.empirical_rate = pairwise_sum(rates) / setup.trials;
  std::vector<double> sq(setup.trials);
  for (int i = 0; i < setup.trials; ++i) {
    const double d = rates[i] - report.empirical_rate;
    sq[i] = d * d;
  }
  const double variance =
      setup.trials > 1 ? pairwise_sum(sq) / (setup.trials - 1) : 0.0;
  report.ci_halfwidth = 1.96 * std::sqrt(variance / setup.trials);
  report.proxy_rate = proxy;
  report.rel_error = std::fabs(report.empirical_rate - proxy) /
                     report.empirical_rate;
  return report;
}

std::string OracleReport::to_json() const {
  nlohmann::json j;
  j["empirical_rate"] = empirical_rate;
  j["proxy_rate"] = proxy_rate;
  j["rel_error"] = rel_error;
  j["ci_halfwidth"] = ci_halfwidth;
  j["n_trials"] = n_trials;
  j["redraws"] = redraws;
  return j.dump(2);
}

}  // namespace dmimo
