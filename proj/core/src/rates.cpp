#include "dmimo/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace dmimo {

Cluster::Cluster(std::vector<int> ids) : members(std::move(ids)) {
  std::sort(members.begin(), members.end());
  if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
    throw std::invalid_argument("cluster members must be distinct");
  }
}

bool Cluster::contains(int bs_id) const {
  return std::binary_search(members.begin(), members.end(), bs_id);
}

std::string Cluster::label() const {
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(members[i]);
  }
  return out;
}

const char* precoder_name(Precoder p) {
  return p == Precoder::kZf ? "zf" : "mrt";
}

double beam_gain(int antennas, int users_per_rb) {
  if (users_per_rb < 1) throw std::invalid_argument("S(L) must be >= 1");
  if (users_per_rb > antennas) {
    throw std::invalid_argument("S(L) must not exceed the antenna count");
  }
  return static_cast<double>(antennas - users_per_rb + 1) / users_per_rb;
}

namespace {

bool tier_allowed(const BaseStation& bs, const std::optional<Tier>& tier) {
  return !tier || bs.tier == *tier;
}

// sigma^2 + sum over out-of-cluster BSs of P*beta, restricted to the
// interferer tier when one is set.
double out_of_cluster_power(int user, const Cluster& cluster,
                            const LinkGainMap& gains,
                            const std::vector<BaseStation>& stations,
                            const RateOptions& opts) {
  double power = 0.0;
  for (const BaseStation& bs : stations) {
    if (cluster.contains(bs.id)) continue;
    if (!tier_allowed(bs, opts.interferer_tier)) continue;
    power += bs.tx_power_w * gains.beta(user, bs.id);
  }
  return power;
}

}  // namespace

double zf_peak_rate(int user, const Cluster& cluster, const LinkGainMap& gains,
                    const std::vector<BaseStation>& stations,
                    const RateOptions& opts) {
  if (cluster.size() == 0) throw std::invalid_argument("empty cluster");
  const int size = cluster.size();
  // The double sum over the cluster factors into (sum_j sqrt(...))^2.
  double amplitude = 0.0;
  for (const int j : cluster.members) {
    const BaseStation& bs = stations.at(j);
    amplitude += std::sqrt(bs.tx_power_w * gains.beta(user, j) *
                           beam_gain(bs.antennas, bs.users_per_rb(size)));
  }
  const double signal = amplitude * amplitude;
  const double denom = gains.noise_power_w +
                       out_of_cluster_power(user, cluster, gains, stations, opts);
  return std::log2(1.0 + signal / denom);
}

double mrt_peak_rate(int user, const Cluster& cluster, const LinkGainMap& gains,
                     const std::vector<BaseStation>& stations,
                     const RateOptions& opts) {
  if (cluster.size() == 0) throw std::invalid_argument("empty cluster");
  const int size = cluster.size();
  double amplitude = 0.0;
  double intra_cluster = 0.0;
  for (const int j : cluster.members) {
    const BaseStation& bs = stations.at(j);
    const int budget = bs.users_per_rb(size);
    const double p_beta = bs.tx_power_w * gains.beta(user, j);
    amplitude += std::sqrt(p_beta * bs.antennas / budget);
    intra_cluster += p_beta * (budget - 1) / budget;
  }
  const double signal = amplitude * amplitude;
  const double denom = gains.noise_power_w + intra_cluster +
                       out_of_cluster_power(user, cluster, gains, stations, opts);
  return std::log2(1.0 + signal / denom);
}

std::vector<std::vector<Cluster>> enumerate_candidates(
    int user, const LinkGainMap& gains,
    const std::vector<BaseStation>& stations, int l_max, int n_strongest,
    CandidateMode mode, const RateOptions& opts) {
  if (l_max < 1) throw std::invalid_argument("l_max must be >= 1");
  if (n_strongest < l_max) {
    throw std::invalid_argument("n_strongest must be >= l_max");
  }
  std::vector<int> order;
  for (const BaseStation& bs : stations) {
    if (tier_allowed(bs, opts.member_tier)) order.push_back(bs.id);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ga = stations[a].tx_power_w * gains.beta(user, a);
    const double gb = stations[b].tx_power_w * gains.beta(user, b);
    if (ga != gb) return ga > gb;
    return a < b;
  });
  if (static_cast<int>(order.size()) > n_strongest) order.resize(n_strongest);

  std::vector<std::vector<Cluster>> by_size(l_max + 1);
  for (int size = 1; size <= l_max; ++size) {
    if (size > static_cast<int>(order.size())) continue;  // no candidate
    if (mode == CandidateMode::kStrongest) {
      by_size[size].emplace_back(
          std::vector<int>(order.begin(), order.begin() + size));
    } else {
      // All size-L subsets of the strongest BSs.
      std::vector<int> pick(size);
      std::vector<int> idx(size);
      std::iota(idx.begin(), idx.end(), 0);
      const int n = static_cast<int>(order.size());
      while (true) {
        for (int i = 0; i < size; ++i) pick[i] = order[idx[i]];
        by_size[size].emplace_back(pick);
        int i = size - 1;
        while (i >= 0 && idx[i] == n - size + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
  }
  return by_size;
}

ClusterCatalog::ClusterCatalog(int num_users, int l_max)
    : num_users_(num_users), l_max_(l_max), by_user_(num_users) {}

void ClusterCatalog::add(int user, Cluster cluster, double rate) {
  if (user < 0 || user >= num_users_) throw std::out_of_range("bad user id");
  if (cluster.size() < 1 || cluster.size() > l_max_) {
    throw std::invalid_argument("cluster size out of range");
  }
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw std::invalid_argument("rate must be finite and nonnegative");
  }
  if (find(user, cluster)) {
    throw std::invalid_argument("duplicate catalog entry");
  }
  by_user_[user].push_back(static_cast<int>(entries_.size()));
  entries_.push_back({user, std::move(cluster), rate});
}

const std::vector<int>& ClusterCatalog::entries_of(int user) const {
  return by_user_.at(user);
}

std::vector<int> ClusterCatalog::entries_of_size(int user, int size) const {
  std::vector<int> out;
  for (const int e : by_user_.at(user)) {
    if (entries_[e].cluster.size() == size) out.push_back(e);
  }
  return out;
}

std::optional<int> ClusterCatalog::find(int user, const Cluster& cluster) const {
  for (const int e : by_user_.at(user)) {
    if (entries_[e].cluster == cluster) return e;
  }
  return std::nullopt;
}

bool ClusterCatalog::user_served(int user) const {
  for (const int e : by_user_.at(user)) {
    if (entries_[e].rate > 0.0) return true;
  }
  return false;
}

void ClusterCatalog::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "user_id,cluster_members,L,rate_bps_hz\n";
  char buf[64];
  for (const CatalogEntry& e : entries_) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.rate);
    out << e.user << ',' << e.cluster.label() << ',' << e.cluster.size() << ','
        << buf << '\n';
  }
}

ClusterCatalog build_catalog(const LinkGainMap& gains,
                             const std::vector<BaseStation>& stations,
                             Precoder precoder, int l_max, CandidateMode mode,
                             int n_strongest, const RateOptions& opts) {
  for (const BaseStation& bs : stations) validate_budget(bs, l_max);
  if (n_strongest == 0) n_strongest = l_max;
  ClusterCatalog catalog(gains.num_users(), l_max);
  for (int k = 0; k < gains.num_users(); ++k) {
    const auto candidates =
        enumerate_candidates(k, gains, stations, l_max, n_strongest, mode, opts);
    for (int size = 1; size <= l_max; ++size) {
      for (const Cluster& cluster : candidates[size]) {
        const double rate =
            precoder == Precoder::kZf
                ? zf_peak_rate(k, cluster, gains, stations, opts)
                : mrt_peak_rate(k, cluster, gains, stations, opts);
        catalog.add(k, cluster, rate);
      }
    }
  }
  return catalog;
}

}  // namespace dmimo
