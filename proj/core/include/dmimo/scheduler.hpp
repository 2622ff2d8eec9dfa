#pragma once

#include <map>
#include <string>
#include <vector>

#include "dmimo/num.hpp"
#include "dmimo/rates.hpp"

namespace dmimo {

// Largest-remainder apportionment of the horizon to partition labels, with
// leftover RBs handed to the largest lambda; labels are then interleaved
// proportionally across the horizon.
std::vector<int> apportion_partitions(const std::map<int, double>& lambda,
                                      int horizon);

struct VqParams {
  // Queue credit granted to every user per RB while the arrival gate is
  // open. One unit per RB makes the accumulated credit of user k grow by
  // alpha_k service quanta per RB, which is what lets the scheduler track
  // the target fractions instead of overshooting them.
  double a_max = 1.0;
  double v_factor = 10.0;  // V = v_factor * sum_k Rtilde_k
  bool record_queue_trace = false;
};

struct VirtualQueueState {
  std::vector<double> q;            // one queue per eligible user
  std::vector<double> target_rate;  // Rtilde_k = 1 / alpha_k
  double a_max = 1.0;
  double v = 0.0;
};

// Virtual-queue update: served queues drain by their target rate, and every
// queue gains a_max when the pre-update total sits below V.
void vq_step(VirtualQueueState& state, const std::vector<int>& scheduled);

// One WSRM pass: customers sorted by weight descending (ties by user id),
// admitted when every member BS stays within capacity and the user is not
// already admitted. Returns indices into the parallel arrays.
std::vector<int> greedy_wsrm(const std::vector<double>& weights,
                             const std::vector<int>& user_ids,
                             const std::vector<Cluster>& clusters,
                             const std::map<int, int>& bs_capacity);

struct RbCluster {
  Cluster cluster;
  std::vector<int> users;
};

struct Schedule {
  int horizon = 0;
  std::vector<int> rb_partition;           // per-RB partition label
  std::vector<std::vector<RbCluster>> rbs;  // scheduling sets per RB

  std::vector<double> realized_x;          // per catalog entry, counts / T
  std::map<int, double> realized_lambda;   // label -> RB share
  std::vector<double> throughput;          // sum_C realized_x * r per user
  std::vector<double> max_queue;           // peak VQ length per user
  std::vector<std::vector<double>> queue_trace;  // optional, per user

  void save_csv(const std::string& path) const;  // t, L, cluster_members, user_id
  std::string summary_json(const ClusterCatalog& catalog) const;
};

// Runs the per-partition VQ + greedy schedulers for a unique-association
// allocation (UCS, cellular or orthogonal-split).
Schedule run_schedule(const Allocation& alloc, const ClusterCatalog& catalog,
                      const std::vector<BaseStation>& stations, int horizon,
                      const VqParams& params = {});

// MCS variant: within each size-L partition each BS serves a
// largest-remainder-rounded prefix of RBs in cellular mode (share y_jL per
// lambda_L) and the rest in cluster mode.
Schedule run_schedule_mcs(const Allocation& alloc,
                          const ClusterCatalog& catalog,
                          const std::vector<BaseStation>& stations, int horizon,
                          const VqParams& params = {});

// Per-RB admissibility for UCS (single cluster size per RB) or the MCS
// per-RB rule (cellular or size-L at every BS). Returns human-readable
// violations; empty means valid.
std::vector<std::string> validate_schedule(
    const Schedule& schedule, const std::vector<BaseStation>& stations,
    Architecture architecture);

// Distinct scheduled users on the RB; one uplink pilot dimension each.
int pilot_dimensions(const std::vector<RbCluster>& rb);

}  // namespace dmimo
