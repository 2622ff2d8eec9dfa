#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmimo/topology.hpp"

namespace dmimo {

// A candidate serving cluster: sorted, distinct BS ids.
struct Cluster {
  std::vector<int> members;

  Cluster() = default;
  explicit Cluster(std::vector<int> ids);

  int size() const { return static_cast<int>(members.size()); }
  bool contains(int bs_id) const;
  std::string label() const;  // "1;3;7"

  friend bool operator==(const Cluster&, const Cluster&) = default;
  // Lexicographic on the sorted member list; shorter prefixes first.
  friend auto operator<=>(const Cluster& a, const Cluster& b) {
    return a.members <=> b.members;
  }
};

enum class Precoder { kZf, kMrt };
enum class CandidateMode { kStrongest, kRich };

const char* precoder_name(Precoder p);

// ZF beamforming gain factor (M - S(L) + 1) / S(L).
double beam_gain(int antennas, int users_per_rb);

// Optional restrictions used by the orthogonal-split scenario: clusters and
// interferers drawn from one tier only. Empty mask = all stations.
struct RateOptions {
  std::optional<Tier> member_tier;
  std::optional<Tier> interferer_tier;
};

double zf_peak_rate(int user, const Cluster& cluster, const LinkGainMap& gains,
                    const std::vector<BaseStation>& stations,
                    const RateOptions& opts = {});
double mrt_peak_rate(int user, const Cluster& cluster, const LinkGainMap& gains,
                     const std::vector<BaseStation>& stations,
                     const RateOptions& opts = {});

// Candidate clusters for one user, bucketed by size L = 1..l_max. Strongest
// mode yields the single cluster of the L strongest BSs (by P*beta); rich
// mode yields all size-L subsets of the user's n_strongest strongest BSs.
std::vector<std::vector<Cluster>> enumerate_candidates(
    int user, const LinkGainMap& gains,
    const std::vector<BaseStation>& stations, int l_max, int n_strongest,
    CandidateMode mode = CandidateMode::kStrongest,
    const RateOptions& opts = {});

struct CatalogEntry {
  int user = 0;
  Cluster cluster;
  double rate = 0.0;  // bits/s/Hz
};

class ClusterCatalog {
 public:
  ClusterCatalog() = default;
  ClusterCatalog(int num_users, int l_max);

  void add(int user, Cluster cluster, double rate);

  int l_max() const { return l_max_; }
  int num_users() const { return num_users_; }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const std::vector<int>& entries_of(int user) const;
  // Entry indices for (user, size); empty when no candidate of that size.
  std::vector<int> entries_of_size(int user, int size) const;
  const CatalogEntry& entry(int index) const { return entries_[index]; }
  std::optional<int> find(int user, const Cluster& cluster) const;

  // True when the user has at least one candidate with a positive rate.
  bool user_served(int user) const;

  void save_csv(const std::string& path) const;

 private:
  int num_users_ = 0;
  int l_max_ = 0;
  std::vector<CatalogEntry> entries_;
  std::vector<std::vector<int>> by_user_;
};

ClusterCatalog build_catalog(const LinkGainMap& gains,
                             const std::vector<BaseStation>& stations,
                             Precoder precoder, int l_max,
                             CandidateMode mode = CandidateMode::kStrongest,
                             int n_strongest = 0,  // 0 = l_max
                             const RateOptions& opts = {});

}  // namespace dmimo
