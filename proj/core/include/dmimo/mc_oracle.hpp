#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dmimo/rates.hpp"
#include "dmimo/topology.hpp"

namespace dmimo {

// Rayleigh block-fading draws on counter-based streams keyed by
// (seed, trial, user, bs), so any draw can be regenerated independently of
// evaluation order.
class FadingModel {
 public:
  explicit FadingModel(std::uint64_t seed) : seed_(seed) {}

  // h_kj with i.i.d. CN(0,1) entries; attempt > 0 redraws a fresh vector.
  Eigen::VectorXcd fast_fading(int trial, int user, int bs, int antennas,
                               int attempt = 0) const;
  // g_kj = sqrt(beta) h_kj.
  Eigen::VectorXcd channel(int trial, int user, int bs, int antennas,
                           double beta, int attempt = 0) const;

 private:
  std::uint64_t seed_;
};

// F = G (G^H G)^{-1} A^{1/2} with A making every beam unit norm; each column
// is nulled against the other users' channels at this BS. Throws on a
// rank-deficient G (callers redraw).
Eigen::MatrixXcd zf_precoder(const Eigen::MatrixXcd& channels);

// Normalized conjugate channel.
Eigen::VectorXcd mrt_precoder(const Eigen::VectorXcd& channel);

// Everything one BS transmits on an RB: served user keys with their
// unit-norm beams, equal power split P/N.
struct RbStation {
  int bs = 0;
  double power_w = 0.0;
  std::vector<int> users;    // user keys, aligned with beam columns
  Eigen::MatrixXcd beams;    // M x N
};

struct RbContext {
  std::vector<RbStation> stations;
  std::vector<Eigen::VectorXcd> probe_channels;  // probe toward each station
  double noise_power_w = 1.0;
};

// Instantaneous SINR of the probe user served by `cluster`, with the
// received power grouped into coherent desired signal, intra/inter-cluster
// interference and noise. The probe must be served by every cluster member.
double rb_sinr(const RbContext& rb, int probe_user, const Cluster& cluster);

struct OracleSetup {
  Precoder precoder = Precoder::kZf;
  Cluster cluster;                    // serving cluster, ids into stations
  std::vector<BaseStation> stations;  // powers, antennas, budgets
  std::vector<double> beta;           // probe slow-fading gain per station
  double noise_power_w = 1.0;
  // Budget size used to load out-of-cluster BSs; 0 means |cluster|.
  int out_cluster_size = 0;
  int trials = 1000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency; results are thread-invariant
};

struct OracleReport {
  double empirical_rate = 0.0;  // mean of log2(1+SINR) over trials
  double proxy_rate = 0.0;      // closed-form prediction
  double rel_error = 0.0;       // |empirical - proxy| / empirical
  double ci_halfwidth = 0.0;    // 95% confidence half-width
  int n_trials = 0;
  int redraws = 0;              // rank-deficient draws that were retried

  std::string to_json() const;
};

// Monte Carlo check of the closed-form peak rate: every in-cluster BS is
// loaded to S_j(L) users (the probe plus independent dummies), out-of-cluster
// BSs transmit full power on random unit beams toward their own full loads.
// Trials run on keyed RNG streams and are aggregated in trial order, so the
// report does not depend on the worker count.
OracleReport verify_proxy(const OracleSetup& setup);

}  // namespace dmimo
