#include "dmimo/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace dmimo {

std::vector<int> apportion_partitions(const std::map<int, double>& lambda,
                                      int horizon) {
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  double total = 0.0;
  for (const auto& [label, value] : lambda) {
    if (value < 0.0) throw std::invalid_argument("negative lambda");
    total += value;
  }
  if (total > 1.0 + 1e-9) throw std::invalid_argument("lambda sums above 1");

  struct Share {
    int label;
    double quota;
    int count;
  };
  std::vector<Share> shares;
  for (const auto& [label, value] : lambda) {
    if (value > 0.0) shares.push_back({label, value * horizon, 0});
  }
  if (shares.empty() || horizon == 0) return {};

  int assigned = 0;
  for (Share& s : shares) {
    s.count = static_cast<int>(std::floor(s.quota + 1e-12));
    assigned += s.count;
  }
  // One extra RB per label in remainder order, then any leftover (when the
  // lambdas sum below 1) goes to the largest share.
  std::vector<int> order(shares.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ra = shares[a].quota - std::floor(shares[a].quota + 1e-12);
    const double rb = shares[b].quota - std::floor(shares[b].quota + 1e-12);
    if (ra != rb) return ra > rb;
    return shares[a].label < shares[b].label;
  });
  int leftover = horizon - assigned;
  for (const int i : order) {
    if (leftover == 0) break;
    const double rem = shares[i].quota - std::floor(shares[i].quota + 1e-12);
    if (rem <= 1e-9) break;  // integral quotas take no remainder RB
    ++shares[i].count;
    --leftover;
  }
  if (leftover > 0) {
    int largest = 0;
    for (std::size_t i = 1; i < shares.size(); ++i) {
      if (shares[i].quota > shares[largest].quota) largest = static_cast<int>(i);
    }
    shares[largest].count += leftover;
  }

  // Proportional interleave: at each slot pick the label furthest behind its
  // pro-rata pace.
  std::vector<int> labels(horizon);
  std::vector<int> done(shares.size(), 0);
  for (int t = 0; t < horizon; ++t) {
    int pick = -1;
    double best_err = -1.0;
    for (std::size_t i = 0; i < shares.size(); ++i) {
      if (done[i] >= shares[i].count) continue;
      const double err =
          static_cast<double>(shares[i].count) * (t + 1) / horizon - done[i];
      if (err > best_err ||
          (err == best_err && shares[i].label < shares[pick].label)) {
        best_err = err;
        pick = static_cast<int>(i);
      }
    }
    labels[t] = shares[pick].label;
    ++done[pick];
  }
  return labels;
}

void vq_step(VirtualQueueState& state, const std::vector<int>& scheduled) {
  const double q_sum =
      std::accumulate(state.q.begin(), state.q.end(), 0.0);
  const double arrival = state.v > q_sum ? state.a_max : 0.0;
  std::vector<char> served(state.q.size(), 0);
  for (const int i : scheduled) served.at(i) = 1;
  for (std::size_t i = 0; i < state.q.size(); ++i) {
    const double drain = served[i] ? state.target_rate[i] : 0.0;
    state.q[i] = std::max(0.0, state.q[i] - drain) + arrival;
  }
}

std::vector<int> greedy_wsrm(const std::vector<double>& weights,
                             const std::vector<int>& user_ids,
                             const std::vector<Cluster>& clusters,
                             const std::map<int, int>& bs_capacity) {
  const std::size_t n = weights.size();
  if (user_ids.size() != n || clusters.size() != n) {
    throw std::invalid_argument("greedy_wsrm argument sizes differ");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return user_ids[a] < user_ids[b];
  });

  std::map<int, int> load;
  std::set<int> admitted_users;
  std::vector<int> admitted;
  for (const int i : order) {
    if (admitted_users.count(user_ids[i])) continue;
    bool fits = true;
    for (const int j : clusters[i].members) {
      const auto cap = bs_capacity.find(j);
      if (cap == bs_capacity.end() || load[j] + 1 > cap->second) {
        fits = false;
        break;
      }
    }
    if (!fits) continue;
    for (const int j : clusters[i].members) ++load[j];
    admitted_users.insert(user_ids[i]);
    admitted.push_back(i);
  }
  std::sort(admitted.begin(), admitted.end());
  return admitted;
}

namespace {

// One virtual customer of a partition scheduler: a (user, cluster) pair with
// its in-partition target fraction. MCS partitions carry both cellular and
// clustered customers for the same user.
struct Customer {
  int user = 0;
  Cluster cluster;
  int entry = -1;      // catalog entry (clustered / UCS)
  int cell_index = -1; // index into alloc.mcs_cell (cellular mode)
  double alpha = 0.0;
};

struct PartitionRun {
  int label = 0;
  std::vector<Customer> customers;
  VirtualQueueState state;
  std::vector<long long> served_count;
};

void init_state(PartitionRun& run, const VqParams& params) {
  const std::size_t n = run.customers.size();
  run.state.target_rate.resize(n);
  double rt_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.state.target_rate[i] = 1.0 / run.customers[i].alpha;
    rt_sum += run.state.target_rate[i];
  }
  run.state.a_max = params.a_max;
  run.state.v = params.v_factor * rt_sum;
  run.state.q.assign(n, params.a_max);
  run.served_count.assign(n, 0);
}

Schedule assemble(const Allocation& alloc, const ClusterCatalog& catalog,
                  std::vector<PartitionRun>& runs,
                  const std::vector<int>& labels, int horizon,
                  const std::vector<std::vector<RbCluster>>& rbs,
                  std::vector<double> max_queue,
                  std::vector<std::vector<double>> trace) {
  Schedule schedule;
  schedule.horizon = horizon;
  schedule.rb_partition = labels;
  schedule.rbs = rbs;
  schedule.realized_x.assign(alloc.x.size(), 0.0);
  for (const int label : labels) schedule.realized_lambda[label] += 1.0 / horizon;
  for (const PartitionRun& run : runs) {
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      if (run.customers[i].entry >= 0) {
        schedule.realized_x[run.customers[i].entry] +=
            static_cast<double>(run.served_count[i]) / horizon;
      }
    }
  }
  schedule.throughput.assign(catalog.num_users(), 0.0);
  for (std::size_t e = 0; e < schedule.realized_x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    schedule.throughput[entry.user] +=
        schedule.realized_x[e] * entry.rate;
  }
  // Cellular-mode MCS service accounted per user with the size-1 rates.
  for (const PartitionRun& run : runs) {
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      if (run.customers[i].cell_index >= 0) {
        const McsCellEntry& cell = alloc.mcs_cell[run.customers[i].cell_index];
        schedule.throughput[cell.user] +=
            static_cast<double>(run.served_count[i]) / horizon * cell.rate;
      }
    }
  }
  schedule.max_queue = std::move(max_queue);
  schedule.queue_trace = std::move(trace);
  return schedule;
}

}  // namespace

Schedule run_schedule(const Allocation& alloc, const ClusterCatalog& catalog,
                      const std::vector<BaseStation>& stations, int horizon,
                      const VqParams& params) {
  if (alloc.arch == Architecture::kMcs) {
    throw std::invalid_argument("use run_schedule_mcs for MCS allocations");
  }
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");

  const std::vector<int> labels = apportion_partitions(alloc.lambda, horizon);
  std::map<int, int> label_rbs;
  for (const int label : labels) ++label_rbs[label];

  std::map<int, PartitionRun> runs;
  for (const auto& [label, lam] : alloc.lambda) {
    if (lam <= 0.0 || !label_rbs.count(label)) continue;  // skipped partition
    PartitionRun run;
    run.label = label;
    for (std::size_t e = 0; e < alloc.x.size(); ++e) {
      if (alloc.partition_of_entry[e] != label || alloc.x[e] <= 0.0) continue;
      const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
      Customer customer;
      customer.user = entry.user;
      customer.cluster = entry.cluster;
      customer.entry = static_cast<int>(e);
      customer.alpha = std::min(1.0, alloc.x[e] / lam);
      run.customers.push_back(std::move(customer));
    }
    if (run.customers.empty()) continue;
    init_state(run, params);
    runs[label] = std::move(run);
  }

  std::vector<std::vector<RbCluster>> rbs(horizon);
  std::vector<double> max_queue(catalog.num_users(), 0.0);
  std::vector<std::vector<double>> trace;
  if (params.record_queue_trace) trace.resize(catalog.num_users());

  for (int t = 0; t < horizon; ++t) {
    const auto it = runs.find(labels[t]);
    if (it == runs.end()) continue;
    PartitionRun& run = it->second;

    std::vector<double> weights;
    std::vector<int> user_ids;
    std::vector<Cluster> clusters;
    std::vector<int> pool;  // customers holding a full service quantum
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      if (run.state.q[i] >= run.state.target_rate[i] * (1.0 - 1e-12)) {
        pool.push_back(static_cast<int>(i));
        weights.push_back(run.state.q[i] * run.state.target_rate[i]);
        user_ids.push_back(run.customers[i].user);
        clusters.push_back(run.customers[i].cluster);
      }
    }
    std::map<int, int> capacity;
    for (const int i : pool) {
      for (const int j : run.customers[i].cluster.members) {
        capacity[j] =
            stations.at(j).users_per_rb(run.customers[i].cluster.size());
      }
    }
    const std::vector<int> picked =
        greedy_wsrm(weights, user_ids, clusters, capacity);

    std::vector<int> scheduled;
    std::map<Cluster, std::vector<int>> groups;
    for (const int p : picked) {
      scheduled.push_back(pool[p]);
      groups[run.customers[pool[p]].cluster].push_back(
          run.customers[pool[p]].user);
      ++run.served_count[pool[p]];
    }
    for (auto& [cluster, users] : groups) {
      std::sort(users.begin(), users.end());
      rbs[t].push_back({cluster, std::move(users)});
    }
    vq_step(run.state, scheduled);
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      max_queue[run.customers[i].user] =
          std::max(max_queue[run.customers[i].user], run.state.q[i]);
      if (params.record_queue_trace) {
        trace[run.customers[i].user].push_back(run.state.q[i]);
      }
    }
  }

  std::vector<PartitionRun> run_list;
  for (auto& [label, run] : runs) run_list.push_back(std::move(run));
  return assemble(alloc, catalog, run_list, labels, horizon, rbs,
                  std::move(max_queue), std::move(trace));
}

Schedule run_schedule_mcs(const Allocation& alloc,
                          const ClusterCatalog& catalog,
                          const std::vector<BaseStation>& stations, int horizon,
                          const VqParams& params) {
  if (alloc.arch != Architecture::kMcs) {
    throw std::invalid_argument("run_schedule_mcs needs an MCS allocation");
  }
  if (horizon <= 0) throw std::invalid_argument("horizon must be positive");

  const std::vector<int> labels = apportion_partitions(alloc.lambda, horizon);
  std::map<int, int> label_rbs;
  for (const int label : labels) ++label_rbs[label];

  // Per (bs, partition): the BS serves cellular mode on the first
  // cell_rbs RBs of the partition, cluster mode afterwards.
  std::map<std::pair<int, int>, int> cell_rbs;
  for (const auto& [key, y] : alloc.mcs_y) {
    const double lam = alloc.lambda.count(key.second)
                           ? alloc.lambda.at(key.second)
                           : 0.0;
    const int n = label_rbs.count(key.second) ? label_rbs.at(key.second) : 0;
    if (lam <= 0.0 || n == 0) continue;
    cell_rbs[key] = static_cast<int>(std::llround(y / lam * n));
  }

  std::map<int, PartitionRun> runs;
  for (const auto& [label, lam] : alloc.lambda) {
    if (lam <= 0.0 || !label_rbs.count(label)) continue;
    PartitionRun run;
    run.label = label;
    for (std::size_t e = 0; e < alloc.x.size(); ++e) {
      if (alloc.partition_of_entry[e] != label || alloc.x[e] <= 0.0) continue;
      const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
      Customer customer;
      customer.user = entry.user;
      customer.cluster = entry.cluster;
      customer.entry = static_cast<int>(e);
      customer.alpha = std::min(1.0, alloc.x[e] / lam);
      run.customers.push_back(std::move(customer));
    }
    for (std::size_t c = 0; c < alloc.mcs_cell.size(); ++c) {
      const McsCellEntry& cell = alloc.mcs_cell[c];
      if (cell.partition != label || cell.value <= 0.0) continue;
      Customer customer;
      customer.user = cell.user;
      customer.cluster = Cluster({cell.bs});
      customer.cell_index = static_cast<int>(c);
      customer.alpha = std::min(1.0, cell.value / lam);
      run.customers.push_back(std::move(customer));
    }
    if (run.customers.empty()) continue;
    init_state(run, params);
    runs[label] = std::move(run);
  }

  std::vector<std::vector<RbCluster>> rbs(horizon);
  std::vector<double> max_queue(catalog.num_users(), 0.0);
  std::vector<std::vector<double>> trace;
  if (params.record_queue_trace) trace.resize(catalog.num_users());
  std::map<int, int> partition_pos;  // label -> RBs of it seen so far

  for (int t = 0; t < horizon; ++t) {
    const int label = labels[t];
    const int pos = partition_pos[label]++;
    const auto it = runs.find(label);
    if (it == runs.end()) continue;
    PartitionRun& run = it->second;

    const auto bs_cellular = [&](int bs) {
      const auto share = cell_rbs.find({bs, label});
      return share != cell_rbs.end() && pos < share->second;
    };

    std::vector<double> weights;
    std::vector<int> user_ids;
    std::vector<Cluster> clusters;
    std::vector<int> pool;
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      if (run.state.q[i] < run.state.target_rate[i] * (1.0 - 1e-12)) continue;
      const Customer& customer = run.customers[i];
      const bool cellular = customer.cell_index >= 0;
      bool mode_ok = true;
      for (const int j : customer.cluster.members) {
        if (bs_cellular(j) != cellular) {
          mode_ok = false;
          break;
        }
      }
      if (!mode_ok) continue;
      pool.push_back(static_cast<int>(i));
      weights.push_back(run.state.q[i] * run.state.target_rate[i]);
      user_ids.push_back(customer.user);
      clusters.push_back(customer.cluster);
    }
    std::map<int, int> capacity;
    for (const int i : pool) {
      const Customer& customer = run.customers[i];
      for (const int j : customer.cluster.members) {
        capacity[j] = stations.at(j).users_per_rb(
            customer.cell_index >= 0 ? 1 : label);
      }
    }
    const std::vector<int> picked =
        greedy_wsrm(weights, user_ids, clusters, capacity);

    std::vector<int> scheduled;
    std::map<Cluster, std::vector<int>> groups;
    for (const int p : picked) {
      scheduled.push_back(pool[p]);
      groups[run.customers[pool[p]].cluster].push_back(
          run.customers[pool[p]].user);
      ++run.served_count[pool[p]];
    }
    for (auto& [cluster, users] : groups) {
      std::sort(users.begin(), users.end());
      rbs[t].push_back({cluster, std::move(users)});
    }
    vq_step(run.state, scheduled);
    for (std::size_t i = 0; i < run.customers.size(); ++i) {
      max_queue[run.customers[i].user] =
          std::max(max_queue[run.customers[i].user], run.state.q[i]);
      if (params.record_queue_trace) {
        trace[run.customers[i].user].push_back(run.state.q[i]);
      }
    }
  }

  std::vector<PartitionRun> run_list;
  for (auto& [label, run] : runs) run_list.push_back(std::move(run));
  return assemble(alloc, catalog, run_list, labels, horizon, rbs,
                  std::move(max_queue), std::move(trace));
}

std::vector<std::string> validate_schedule(
    const Schedule& schedule, const std::vector<BaseStation>& stations,
    Architecture architecture) {
  std::vector<std::string> violations;
  const auto say = [&](int t, const std::string& what) {
    violations.push_back("rb " + std::to_string(t) + ": " + what);
  };
  for (int t = 0; t < schedule.horizon; ++t) {
    const int label = schedule.rb_partition.at(t);
    const int rb_size = label == kMacroBandPartition ? 1 : label;
    std::map<int, int> seen_user;
    // (bs -> (#users via cellular, #users via size-rb_size clusters))
    std::map<int, std::pair<int, int>> bs_users;
    for (const RbCluster& rc : schedule.rbs[t]) {
      const int size = rc.cluster.size();
      if (architecture == Architecture::kMcs) {
        if (size != 1 && size != rb_size) {
          say(t, "cluster size " + std::to_string(size) +
                     " in a size-" + std::to_string(rb_size) + " partition");
        }
      } else {
        if (size != rb_size) {
          say(t, "cluster size " + std::to_string(size) +
                     " on an RB of size " + std::to_string(rb_size));
        }
      }
      for (const int user : rc.users) {
        if (++seen_user[user] == 2) {
          say(t, "user " + std::to_string(user) + " served by two clusters");
        }
        for (const int j : rc.cluster.members) {
          if (size == 1) {
            ++bs_users[j].first;
          } else {
            ++bs_users[j].second;
          }
        }
      }
    }
    for (const auto& [bs, counts] : bs_users) {
      const auto& [cellular, clustered] = counts;
      if (architecture == Architecture::kMcs) {
        if (cellular > 0 && clustered > 0) {
          say(t, "BS " + std::to_string(bs) + " mixes cellular and clustered");
        } else if (cellular > stations.at(bs).users_per_rb(1)) {
          say(t, "BS " + std::to_string(bs) + " over cellular budget");
        } else if (clustered > stations.at(bs).users_per_rb(rb_size)) {
          say(t, "BS " + std::to_string(bs) + " over cluster budget");
        }
      } else {
        if (cellular + clustered > stations.at(bs).users_per_rb(rb_size)) {
          say(t, "BS " + std::to_string(bs) + " over budget S_j(L)");
        }
      }
    }
  }
  return violations;
}

int pilot_dimensions(const std::vector<RbCluster>& rb) {
  std::set<int> users;
  for (const RbCluster& rc : rb) users.insert(rc.users.begin(), rc.users.end());
  return static_cast<int>(users.size());
}

void Schedule::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "t,L,cluster_members,user_id\n";
  for (int t = 0; t < horizon; ++t) {
    for (const RbCluster& rc : rbs[t]) {
      for (const int user : rc.users) {
        out << t << ',' << rb_partition[t] << ',' << rc.cluster.label() << ','
            << user << '\n';
      }
    }
  }
}

std::string Schedule::summary_json(const ClusterCatalog& catalog) const {
  nlohmann::json j;
  for (const auto& [label, share] : realized_lambda) {
    j["realized_lambda"][std::to_string(label)] = share;
  }
  j["realized_fractions"] = nlohmann::json::array();
  for (std::size_t e = 0; e < realized_x.size(); ++e) {
    if (realized_x[e] == 0.0) continue;
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    j["realized_fractions"].push_back({{"user", entry.user},
                                       {"cluster", entry.cluster.members},
                                       {"value", realized_x[e]}});
  }
  j["throughput"] = throughput;
  j["max_queue"] = max_queue;
  if (!queue_trace.empty()) j["queue_trace"] = queue_trace;
  return j.dump(2);
}

}  // namespace dmimo
