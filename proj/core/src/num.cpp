#include "dmimo/num.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "dmimo/ipm.hpp"

namespace dmimo {

namespace {

constexpr double kActiveTol = 1e-6;

// Fills objective/throughput/orphans from the solved activities.
void finish_allocation(Allocation& alloc, const ClusterCatalog& catalog) {
  const int num_users = catalog.num_users();
  alloc.throughput.assign(num_users, 0.0);
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    alloc.throughput[entry.user] += alloc.x[e] * entry.rate;
  }
  for (const McsCellEntry& cell : alloc.mcs_cell) {
    alloc.throughput[cell.user] += cell.value * cell.rate;
  }
  alloc.objective = 0.0;
  alloc.orphans.clear();
  for (int k = 0; k < num_users; ++k) {
    if (catalog.user_served(k)) {
      alloc.objective += std::log(alloc.throughput[k]);
    } else {
      alloc.orphans.push_back(k);
    }
  }
}

struct EntryBuckets {
  // (bs, L) -> entry indices of size-L clusters containing the BS
  std::map<std::pair<int, int>, std::vector<int>> per_bs;
  // (user, L) -> entry indices
  std::map<std::pair<int, int>, std::vector<int>> per_user;
};

EntryBuckets bucket_entries(const ClusterCatalog& catalog) {
  EntryBuckets buckets;
  for (int e = 0; e < static_cast<int>(catalog.entries().size()); ++e) {
    const CatalogEntry& entry = catalog.entry(e);
    const int size = entry.cluster.size();
    buckets.per_user[{entry.user, size}].push_back(e);
    for (const int j : entry.cluster.members) {
      buckets.per_bs[{j, size}].push_back(e);
    }
  }
  return buckets;
}

}  // namespace

Allocation solve_ucs(const ClusterCatalog& catalog,
                     const std::vector<BaseStation>& stations, Utility utility,
                     const SolveOptions& options) {
  if (utility != Utility::kLog) {
    throw std::invalid_argument("only the log utility is supported");
  }
  const int num_entries = static_cast<int>(catalog.entries().size());
  const int l_max = catalog.l_max();
  if (num_entries == 0) throw std::invalid_argument("empty catalog");

  const EntryBuckets buckets = bucket_entries(catalog);
  LogUtilityProgram program(num_entries + l_max);
  const auto lambda_var = [&](int size) { return num_entries + size - 1; };

  for (int k = 0; k < catalog.num_users(); ++k) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : catalog.entries_of(k)) {
      if (catalog.entry(e).rate > 0.0) coeffs.emplace_back(e, catalog.entry(e).rate);
    }
    if (!coeffs.empty()) program.add_term(1.0, std::move(coeffs));
  }

  std::map<std::pair<int, int>, int> bs_row, user_row;
  for (const auto& [key, entries] : buckets.per_bs) {
    const auto& [bs, size] = key;
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    coeffs.emplace_back(lambda_var(size),
                        -static_cast<double>(stations.at(bs).users_per_rb(size)));
    bs_row[key] = program.add_row(
        std::move(coeffs), 0.0,
        "bs:" + std::to_string(bs) + ",L" + std::to_string(size));
  }
  for (const auto& [key, entries] : buckets.per_user) {
    const auto& [user, size] = key;
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    coeffs.emplace_back(lambda_var(size), -1.0);
    user_row[key] = program.add_row(
        std::move(coeffs), 0.0,
        "user:" + std::to_string(user) + ",L" + std::to_string(size));
  }
  int budget_row = -1;
  {
    std::vector<std::pair<int, double>> coeffs;
    for (int size = 1; size <= l_max; ++size) coeffs.emplace_back(lambda_var(size), 1.0);
    budget_row = program.add_row(std::move(coeffs), 1.0, "sum_lambda");
  }

  // Strictly feasible start: half budgets all around.
  Eigen::VectorXd z0(program.num_vars());
  const double lambda0 = 0.5 / l_max;
  for (int size = 1; size <= l_max; ++size) z0[lambda_var(size)] = lambda0;
  for (int e = 0; e < num_entries; ++e) {
    const CatalogEntry& entry = catalog.entry(e);
    const int size = entry.cluster.size();
    double cap = lambda0 /
                 buckets.per_user.at({entry.user, size}).size();
    for (const int j : entry.cluster.members) {
      const double budget = stations.at(j).users_per_rb(size);
      cap = std::min(cap, lambda0 * budget /
                              buckets.per_bs.at({j, size}).size());
    }
    z0[e] = 0.5 * cap;
  }

  const IpmResult result =
      solve_log_program(program, z0, IpmOptions{.gap_tol = options.tol});

  Allocation alloc;
  alloc.arch = Architecture::kUcs;
  alloc.x.assign(result.z.data(), result.z.data() + num_entries);
  alloc.partition_of_entry.resize(num_entries);
  for (int e = 0; e < num_entries; ++e) {
    alloc.partition_of_entry[e] = catalog.entry(e).cluster.size();
  }
  for (int size = 1; size <= l_max; ++size) {
    alloc.lambda[size] = result.z[lambda_var(size)];
  }
  for (const auto& [key, row] : bs_row) alloc.solver_nu[key] = result.row_duals[row];
  for (const auto& [key, row] : user_row) alloc.solver_mu[key] = result.row_duals[row];
  alloc.solver_theta = result.row_duals[budget_row];
  alloc.duality_gap = result.duality_gap;
  finish_allocation(alloc, catalog);
  alloc.feasibility_residual =
      allocation_max_violation(alloc, catalog, stations);
  return alloc;
}

Allocation solve_cellular(const ClusterCatalog& catalog,
                          const std::vector<BaseStation>& stations,
                          const SolveOptions& options) {
  const int num_entries = static_cast<int>(catalog.entries().size());
  if (num_entries == 0) throw std::invalid_argument("empty catalog");
  for (const CatalogEntry& entry : catalog.entries()) {
    if (entry.cluster.size() != 1) {
      throw std::invalid_argument("cellular NUM needs a size-1 catalog");
    }
  }
  const EntryBuckets buckets = bucket_entries(catalog);
  LogUtilityProgram program(num_entries);

  for (int k = 0; k < catalog.num_users(); ++k) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : catalog.entries_of(k)) {
      if (catalog.entry(e).rate > 0.0) coeffs.emplace_back(e, catalog.entry(e).rate);
    }
    if (!coeffs.empty()) program.add_term(1.0, std::move(coeffs));
  }
  std::map<std::pair<int, int>, int> bs_row, user_row;
  for (const auto& [key, entries] : buckets.per_bs) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    bs_row[key] = program.add_row(
        std::move(coeffs),
        static_cast<double>(stations.at(key.first).users_per_rb(1)),
        "bs:" + std::to_string(key.first));
  }
  for (const auto& [key, entries] : buckets.per_user) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    user_row[key] = program.add_row(std::move(coeffs), 1.0,
                                    "user:" + std::to_string(key.first));
  }

  Eigen::VectorXd z0(num_entries);
  for (int e = 0; e < num_entries; ++e) {
    const CatalogEntry& entry = catalog.entry(e);
    const int bs = entry.cluster.members[0];
    const double cap =
        std::min(1.0 / buckets.per_user.at({entry.user, 1}).size(),
                 stations.at(bs).users_per_rb(1) /
                     static_cast<double>(buckets.per_bs.at({bs, 1}).size()));
    z0[e] = 0.5 * cap;
  }

  const IpmResult result =
      solve_log_program(program, z0, IpmOptions{.gap_tol = options.tol});

  Allocation alloc;
  alloc.arch = Architecture::kUcs;
  alloc.x.assign(result.z.data(), result.z.data() + num_entries);
  alloc.partition_of_entry.assign(num_entries, 1);
  alloc.lambda[1] = 1.0;
  for (const auto& [key, row] : bs_row) alloc.solver_nu[key] = result.row_duals[row];
  for (const auto& [key, row] : user_row) alloc.solver_mu[key] = result.row_duals[row];
  for (const auto& [key, row] : bs_row) {
    alloc.solver_theta +=
        result.row_duals[row] * stations.at(key.first).users_per_rb(1);
  }
  for (const auto& [key, row] : user_row) {
    alloc.solver_theta += result.row_duals[row];
  }
  alloc.duality_gap = result.duality_gap;
  finish_allocation(alloc, catalog);
  alloc.feasibility_residual =
      allocation_max_violation(alloc, catalog, stations);
  return alloc;
}

Allocation solve_mcs(const ClusterCatalog& catalog,
                     const std::vector<BaseStation>& stations, McsMode mode,
                     const SolveOptions& options) {
  const int l_max = catalog.l_max();
  if (l_max < 2) throw std::invalid_argument("MCS needs l_max >= 2");
  const int num_entries = static_cast<int>(catalog.entries().size());
  const EntryBuckets buckets = bucket_entries(catalog);

  std::vector<int> partitions;
  for (int size = 2; size <= l_max; ++size) partitions.push_back(size);

  // Variable layout: clustered entry activities, then per-partition cellular
  // activities, then y_jL shares, then lambdas.
  struct CellVar {
    int user, bs, partition, entry;
  };
  std::vector<int> cluster_vars;           // catalog entry -> var (or -1)
  std::vector<CellVar> cell_vars;
  std::map<std::pair<int, int>, int> y_vars;  // (bs, L) -> var
  std::map<int, int> lambda_vars;             // L -> var
  int next = 0;

  cluster_vars.assign(num_entries, -1);
  if (mode != McsMode::kAllCellular) {
    for (int e = 0; e < num_entries; ++e) {
      if (catalog.entry(e).cluster.size() >= 2) cluster_vars[e] = next++;
    }
  }
  if (mode != McsMode::kZeroCellular) {
    for (int k = 0; k < catalog.num_users(); ++k) {
      for (const int e : catalog.entries_of_size(k, 1)) {
        for (const int L : partitions) {
          cell_vars.push_back({k, catalog.entry(e).cluster.members[0], L, e});
        }
      }
    }
  }
  const int cell_base = next;
  next += static_cast<int>(cell_vars.size());
  if (mode == McsMode::kFree) {
    std::set<std::pair<int, int>> needed;
    for (const CellVar& cv : cell_vars) needed.insert({cv.bs, cv.partition});
    for (const auto& [key, entries] : buckets.per_bs) {
      if (key.second >= 2) needed.insert(key);
    }
    for (const auto& key : needed) y_vars[key] = next++;
  }
  for (const int L : partitions) lambda_vars[L] = next++;

  LogUtilityProgram program(next);

  for (int k = 0; k < catalog.num_users(); ++k) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : catalog.entries_of(k)) {
      if (cluster_vars[e] >= 0 && catalog.entry(e).rate > 0.0) {
        coeffs.emplace_back(cluster_vars[e], catalog.entry(e).rate);
      }
    }
    for (int c = 0; c < static_cast<int>(cell_vars.size()); ++c) {
      if (cell_vars[c].user == k && catalog.entry(cell_vars[c].entry).rate > 0.0) {
        coeffs.emplace_back(cell_base + c, catalog.entry(cell_vars[c].entry).rate);
      }
    }
    if (!coeffs.empty()) program.add_term(1.0, std::move(coeffs));
  }

  // Cellular-mode caps: sum_k xc_kjL <= S_j(1) * y_jL (y = lambda when pinned).
  std::map<std::pair<int, int>, std::vector<int>> cell_by_bs;
  for (int c = 0; c < static_cast<int>(cell_vars.size()); ++c) {
    cell_by_bs[{cell_vars[c].bs, cell_vars[c].partition}].push_back(c);
  }
  for (const auto& [key, vars] : cell_by_bs) {
    const double s1 = stations.at(key.first).users_per_rb(1);
    std::vector<std::pair<int, double>> coeffs;
    for (const int c : vars) coeffs.emplace_back(cell_base + c, 1.0);
    if (mode == McsMode::kFree) {
      coeffs.emplace_back(y_vars.at(key), -s1);
    } else {
      coeffs.emplace_back(lambda_vars.at(key.second), -s1);
    }
    program.add_row(std::move(coeffs), 0.0,
                    "cell:" + std::to_string(key.first) + ",L" +
                        std::to_string(key.second));
  }
  // Clustered caps: sum x + S_j(L) y_jL <= S_j(L) lambda_L.
  for (const auto& [key, entries] : buckets.per_bs) {
    if (key.second < 2 || mode == McsMode::kAllCellular) continue;
    const double sl = stations.at(key.first).users_per_rb(key.second);
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(cluster_vars[e], 1.0);
    if (mode == McsMode::kFree && y_vars.count(key)) {
      coeffs.emplace_back(y_vars.at(key), sl);
    }
    coeffs.emplace_back(lambda_vars.at(key.second), -sl);
    program.add_row(std::move(coeffs), 0.0,
                    "bs:" + std::to_string(key.first) + ",L" +
                        std::to_string(key.second));
  }
  // y_jL <= lambda_L.
  for (const auto& [key, var] : y_vars) {
    program.add_row({{var, 1.0}, {lambda_vars.at(key.second), -1.0}}, 0.0,
                    "y:" + std::to_string(key.first) + ",L" +
                        std::to_string(key.second));
  }
  // Per-user, per-partition totals.
  for (int k = 0; k < catalog.num_users(); ++k) {
    for (const int L : partitions) {
      std::vector<std::pair<int, double>> coeffs;
      const auto it = buckets.per_user.find({k, L});
      if (it != buckets.per_user.end()) {
        for (const int e : it->second) {
          if (cluster_vars[e] >= 0) coeffs.emplace_back(cluster_vars[e], 1.0);
        }
      }
      for (int c = 0; c < static_cast<int>(cell_vars.size()); ++c) {
        if (cell_vars[c].user == k && cell_vars[c].partition == L) {
          coeffs.emplace_back(cell_base + c, 1.0);
        }
      }
      if (coeffs.empty()) continue;
      coeffs.emplace_back(lambda_vars.at(L), -1.0);
      program.add_row(std::move(coeffs), 0.0,
                      "user:" + std::to_string(k) + ",L" + std::to_string(L));
    }
  }
  {
    std::vector<std::pair<int, double>> coeffs;
    for (const int L : partitions) coeffs.emplace_back(lambda_vars.at(L), 1.0);
    program.add_row(std::move(coeffs), 1.0, "sum_lambda");
  }

  // Start: lambdas at half budget, y at lambda/4, activities at half caps.
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(program.num_vars());
  const double lambda0 = 0.5 / partitions.size();
  for (const int L : partitions) z0[lambda_vars.at(L)] = lambda0;
  for (const auto& [key, var] : y_vars) z0[var] = 0.25 * lambda0;
  std::map<std::pair<int, int>, int> user_counts;  // (k, L) -> activity vars
  for (int e = 0; e < num_entries; ++e) {
    if (cluster_vars[e] >= 0) {
      user_counts[{catalog.entry(e).user, catalog.entry(e).cluster.size()}]++;
    }
  }
  for (const CellVar& cv : cell_vars) user_counts[{cv.user, cv.partition}]++;
  for (int e = 0; e < num_entries; ++e) {
    if (cluster_vars[e] < 0) continue;
    const CatalogEntry& entry = catalog.entry(e);
    const int size = entry.cluster.size();
    double cap = lambda0 / user_counts.at({entry.user, size});
    for (const int j : entry.cluster.members) {
      const double budget = stations.at(j).users_per_rb(size);
      const double y0 = mode == McsMode::kFree ? 0.25 * lambda0 : 0.0;
      cap = std::min(cap, (lambda0 - y0) * budget /
                              buckets.per_bs.at({j, size}).size());
    }
    z0[cluster_vars[e]] = 0.5 * cap;
  }
  for (int c = 0; c < static_cast<int>(cell_vars.size()); ++c) {
    const CellVar& cv = cell_vars[c];
    const double y0 = mode == McsMode::kFree ? 0.25 * lambda0 : lambda0;
    const double s1 = stations.at(cv.bs).users_per_rb(1);
    const double cap =
        std::min(lambda0 / user_counts.at({cv.user, cv.partition}),
                 y0 * s1 / cell_by_bs.at({cv.bs, cv.partition}).size());
    z0[cell_base + c] = 0.5 * cap;
  }

  const IpmResult result =
      solve_log_program(program, z0, IpmOptions{.gap_tol = options.tol});

  Allocation alloc;
  alloc.arch = Architecture::kMcs;
  alloc.x.assign(num_entries, 0.0);
  alloc.partition_of_entry.resize(num_entries);
  for (int e = 0; e < num_entries; ++e) {
    alloc.partition_of_entry[e] = catalog.entry(e).cluster.size();
    if (cluster_vars[e] >= 0) alloc.x[e] = result.z[cluster_vars[e]];
  }
  for (int c = 0; c < static_cast<int>(cell_vars.size()); ++c) {
    const CellVar& cv = cell_vars[c];
    alloc.mcs_cell.push_back({cv.user, cv.bs, cv.partition,
                              catalog.entry(cv.entry).rate,
                              result.z[cell_base + c]});
  }
  for (const int L : partitions) alloc.lambda[L] = result.z[lambda_vars.at(L)];
  for (const auto& [key, var] : y_vars) alloc.mcs_y[key] = result.z[var];
  if (mode == McsMode::kZeroCellular) {
    for (const int L : partitions) {
      for (const BaseStation& bs : stations) alloc.mcs_y[{bs.id, L}] = 0.0;
    }
  }
  if (mode == McsMode::kAllCellular) {
    for (const int L : partitions) {
      for (const BaseStation& bs : stations) {
        alloc.mcs_y[{bs.id, L}] = alloc.lambda.at(L);
      }
    }
  }
  alloc.duality_gap = result.duality_gap;
  finish_allocation(alloc, catalog);
  alloc.feasibility_residual =
      allocation_max_violation(alloc, catalog, stations);
  return alloc;
}

SplitSolution solve_orthogonal_split(const ClusterCatalog& catalog_macro,
                                     const ClusterCatalog& catalog_pico,
                                     const std::vector<BaseStation>& stations,
                                     double rho, const SolveOptions& options) {
  if (!(rho > 0.0) || rho > 1.0) {
    throw std::invalid_argument("rho must be in (0, 1]");
  }
  if (catalog_macro.num_users() != catalog_pico.num_users()) {
    throw std::invalid_argument("catalog user counts differ");
  }
  for (const CatalogEntry& entry : catalog_macro.entries()) {
    if (entry.cluster.size() != 1 ||
        stations.at(entry.cluster.members[0]).tier != Tier::kMacro) {
      throw std::invalid_argument("macro catalog must hold size-1 macro clusters");
    }
  }
  for (const CatalogEntry& entry : catalog_pico.entries()) {
    for (const int j : entry.cluster.members) {
      if (stations.at(j).tier != Tier::kPico) {
        throw std::invalid_argument("pico catalog must hold pico-only clusters");
      }
    }
  }

  const int num_users = catalog_macro.num_users();
  const int macro_entries = static_cast<int>(catalog_macro.entries().size());
  const int pico_entries = static_cast<int>(catalog_pico.entries().size());
  const int pico_l_max = catalog_pico.l_max();

  ClusterCatalog merged(num_users, std::max(1, pico_l_max));
  for (const CatalogEntry& e : catalog_macro.entries()) merged.add(e.user, e.cluster, e.rate);
  for (const CatalogEntry& e : catalog_pico.entries()) merged.add(e.user, e.cluster, e.rate);

  Allocation alloc;
  alloc.arch = Architecture::kSplit;
  alloc.partition_of_entry.assign(macro_entries + pico_entries, 0);
  for (int e = 0; e < pico_entries; ++e) {
    alloc.partition_of_entry[macro_entries + e] =
        catalog_pico.entry(e).cluster.size();
  }

  if (rho == 1.0) {
    // Degenerate boundary: the whole band goes to macro cellular.
    const Allocation cell = solve_cellular(catalog_macro, stations, options);
    alloc.x = cell.x;
    alloc.x.resize(macro_entries + pico_entries, 0.0);
    alloc.lambda[kMacroBandPartition] = 1.0;
    alloc.duality_gap = cell.duality_gap;
    finish_allocation(alloc, merged);
    alloc.feasibility_residual =
        allocation_max_violation(alloc, merged, stations);
    return {std::move(alloc), std::move(merged)};
  }

  const EntryBuckets macro_buckets = bucket_entries(catalog_macro);
  const EntryBuckets pico_buckets = bucket_entries(catalog_pico);

  // Variables: macro entries, pico entries, pico lambdas.
  const int pico_base = macro_entries;
  const int lambda_base = macro_entries + pico_entries;
  LogUtilityProgram program(lambda_base + pico_l_max);
  const auto lambda_var = [&](int size) { return lambda_base + size - 1; };

  for (int k = 0; k < num_users; ++k) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : catalog_macro.entries_of(k)) {
      if (catalog_macro.entry(e).rate > 0.0) {
        coeffs.emplace_back(e, catalog_macro.entry(e).rate);
      }
    }
    for (const int e : catalog_pico.entries_of(k)) {
      if (catalog_pico.entry(e).rate > 0.0) {
        coeffs.emplace_back(pico_base + e, catalog_pico.entry(e).rate);
      }
    }
    if (!coeffs.empty()) program.add_term(1.0, std::move(coeffs));
  }

  for (const auto& [key, entries] : macro_buckets.per_bs) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    program.add_row(std::move(coeffs),
                    rho * stations.at(key.first).users_per_rb(1),
                    "macro_bs:" + std::to_string(key.first));
  }
  for (const auto& [key, entries] : macro_buckets.per_user) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(e, 1.0);
    program.add_row(std::move(coeffs), rho,
                    "macro_user:" + std::to_string(key.first));
  }
  for (const auto& [key, entries] : pico_buckets.per_bs) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(pico_base + e, 1.0);
    coeffs.emplace_back(
        lambda_var(key.second),
        -static_cast<double>(stations.at(key.first).users_per_rb(key.second)));
    program.add_row(std::move(coeffs), 0.0,
                    "bs:" + std::to_string(key.first) + ",L" +
                        std::to_string(key.second));
  }
  for (const auto& [key, entries] : pico_buckets.per_user) {
    std::vector<std::pair<int, double>> coeffs;
    for (const int e : entries) coeffs.emplace_back(pico_base + e, 1.0);
    coeffs.emplace_back(lambda_var(key.second), -1.0);
    program.add_row(std::move(coeffs), 0.0,
                    "user:" + std::to_string(key.first) + ",L" +
                        std::to_string(key.second));
  }
  {
    std::vector<std::pair<int, double>> coeffs;
    for (int size = 1; size <= pico_l_max; ++size) {
      coeffs.emplace_back(lambda_var(size), 1.0);
    }
    program.add_row(std::move(coeffs), 1.0 - rho, "sum_lambda");
  }

  Eigen::VectorXd z0(program.num_vars());
  const double lambda0 = 0.5 * (1.0 - rho) / pico_l_max;
  for (int size = 1; size <= pico_l_max; ++size) z0[lambda_var(size)] = lambda0;
  for (int e = 0; e < macro_entries; ++e) {
    const CatalogEntry& entry = catalog_macro.entry(e);
    const int bs = entry.cluster.members[0];
    const double cap =
        std::min(rho / macro_buckets.per_user.at({entry.user, 1}).size(),
                 rho * stations.at(bs).users_per_rb(1) /
                     static_cast<double>(macro_buckets.per_bs.at({bs, 1}).size()));
    z0[e] = 0.5 * cap;
  }
  for (int e = 0; e < pico_entries; ++e) {
    const CatalogEntry& entry = catalog_pico.entry(e);
    const int size = entry.cluster.size();
    double cap = lambda0 / pico_buckets.per_user.at({entry.user, size}).size();
    for (const int j : entry.cluster.members) {
      cap = std::min(cap, lambda0 * stations.at(j).users_per_rb(size) /
                              pico_buckets.per_bs.at({j, size}).size());
    }
    z0[pico_base + e] = 0.5 * cap;
  }

  const IpmResult result =
      solve_log_program(program, z0, IpmOptions{.gap_tol = options.tol});

  alloc.x.assign(result.z.data(), result.z.data() + macro_entries + pico_entries);
  alloc.lambda[kMacroBandPartition] = rho;
  for (int size = 1; size <= pico_l_max; ++size) {
    alloc.lambda[size] = result.z[lambda_var(size)];
  }
  alloc.duality_gap = result.duality_gap;
  finish_allocation(alloc, merged);
  alloc.feasibility_residual = allocation_max_violation(alloc, merged, stations);
  return {std::move(alloc), std::move(merged)};
}

double allocation_max_violation(const Allocation& alloc,
                                const ClusterCatalog& catalog,
                                const std::vector<BaseStation>& stations) {
  double worst = 0.0;
  for (const double v : alloc.x) worst = std::max(worst, -v);
  for (const auto& [label, value] : alloc.lambda) worst = std::max(worst, -value);

  const auto lambda_of = [&](int label) {
    const auto it = alloc.lambda.find(label);
    return it == alloc.lambda.end() ? 0.0 : it->second;
  };

  // Per-BS and per-user loads keyed by (id, partition label).
  std::map<std::pair<int, int>, double> bs_load;
  std::map<std::pair<int, int>, double> user_load;
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    const int label = alloc.partition_of_entry.at(e);
    user_load[{entry.user, label}] += alloc.x[e];
    for (const int j : entry.cluster.members) bs_load[{j, label}] += alloc.x[e];
  }
  for (const McsCellEntry& cell : alloc.mcs_cell) {
    user_load[{cell.user, cell.partition}] += cell.value;
  }

  if (alloc.arch == Architecture::kMcs) {
    std::map<std::pair<int, int>, double> cell_load;
    for (const McsCellEntry& cell : alloc.mcs_cell) {
      cell_load[{cell.bs, cell.partition}] += cell.value;
    }
    for (const auto& [key, load] : cell_load) {
      const auto it = alloc.mcs_y.find(key);
      const double y = it == alloc.mcs_y.end() ? 0.0 : it->second;
      worst = std::max(load - y * stations.at(key.first).users_per_rb(1), worst);
    }
    for (const auto& [key, load] : bs_load) {
      const auto it = alloc.mcs_y.find(key);
      const double y = it == alloc.mcs_y.end() ? 0.0 : it->second;
      worst = std::max(load - (lambda_of(key.second) - y) *
                                  stations.at(key.first).users_per_rb(key.second),
                       worst);
    }
    for (const auto& [key, y] : alloc.mcs_y) {
      worst = std::max(y - lambda_of(key.second), worst);
      worst = std::max(-y, worst);
    }
  } else {
    for (const auto& [key, load] : bs_load) {
      const int label = key.second;
      const int size = label == kMacroBandPartition ? 1 : label;
      worst = std::max(load - lambda_of(label) *
                                  stations.at(key.first).users_per_rb(size),
                       worst);
    }
  }
  for (const auto& [key, load] : user_load) {
    worst = std::max(load - lambda_of(key.second), worst);
  }

  double lambda_sum = 0.0;
  for (const auto& [label, value] : alloc.lambda) {
    if (label != kMacroBandPartition) lambda_sum += value;
  }
  const double budget =
      alloc.arch == Architecture::kSplit
          ? 1.0 - lambda_of(kMacroBandPartition)
          : 1.0;
  worst = std::max(lambda_sum - budget, worst);
  return worst;
}

KktReport kkt_residuals(const Allocation& alloc, const ClusterCatalog& catalog,
                        const std::vector<BaseStation>& stations) {
  if (alloc.arch != Architecture::kUcs) {
    throw std::invalid_argument("KKT recovery is defined for UCS allocations");
  }
  const EntryBuckets buckets = bucket_entries(catalog);

  // An interior-point solution never zeroes a variable or a slack exactly, so
  // every constraint whose normalized slack falls below this band is treated
  // as a candidate for a positive multiplier; the soft complementarity rows
  // below push the clearly-inactive ones back to zero.
  constexpr double kBoundaryTol = 1e-3;

  std::map<std::pair<int, int>, double> bs_slack;    // (j,L)
  std::map<std::pair<int, int>, double> user_slack;  // (k,L)
  for (const auto& [key, entries] : buckets.per_bs) {
    double load = 0.0;
    for (const int e : entries) load += alloc.x[e];
    bs_slack[key] = alloc.lambda.at(key.second) *
                        stations.at(key.first).users_per_rb(key.second) -
                    load;
  }
  for (const auto& [key, entries] : buckets.per_user) {
    double load = 0.0;
    for (const int e : entries) load += alloc.x[e];
    user_slack[key] = alloc.lambda.at(key.second) - load;
  }
  double lambda_sum = 0.0;
  for (const auto& [label, value] : alloc.lambda) lambda_sum += value;

  // Normalized slacks drive both the unknown selection and the soft
  // complementarity penalties.
  const auto bs_norm_slack = [&](const std::pair<int, int>& key) {
    const double scale = std::max(
        1.0, alloc.lambda.at(key.second) *
                 stations.at(key.first).users_per_rb(key.second));
    return std::max(0.0, bs_slack.at(key)) / scale;
  };
  const auto user_norm_slack = [&](const std::pair<int, int>& key) {
    return std::max(0.0, user_slack.at(key)) /
           std::max(1.0, alloc.lambda.at(key.second));
  };

  std::map<std::pair<int, int>, int> nu_idx, mu_idx;
  std::vector<double> norm_slack_of;
  int unknowns = 0;
  const auto new_unknown = [&](double ns) {
    norm_slack_of.push_back(ns);
    return unknowns++;
  };
  for (const auto& [key, slack] : bs_slack) {
    const double ns = bs_norm_slack(key);
    if (ns <= kBoundaryTol) nu_idx[key] = new_unknown(ns);
  }
  for (const auto& [key, slack] : user_slack) {
    const double ns = user_norm_slack(key);
    if (ns <= kBoundaryTol) mu_idx[key] = new_unknown(ns);
  }
  const bool theta_active = 1.0 - lambda_sum <= kBoundaryTol;
  const int theta_col =
      theta_active ? new_unknown(std::max(0.0, 1.0 - lambda_sum)) : -1;

  // Equalities: stationarity on the support and, for every grown partition,
  //   sum_j nu_jL S_j(L) + sum_k mu_kL - theta = 0,
  // plus one soft complementarity row per unknown. Near-empty partitions
  // contribute inequalities only (their own lambda multiplier absorbs any
  // shortfall) and are checked after the fit.
  std::vector<std::vector<std::pair<int, double>>> eq_rows;
  std::vector<double> eq_rhs;
  const auto support_tol = [&](int size) {
    return std::max(kActiveTol, 1e-4 * alloc.lambda.at(size));
  };
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    const int size = entry.cluster.size();
    if (entry.rate <= 0.0 || alloc.x[e] <= support_tol(size)) continue;
    const double rk = alloc.throughput[entry.user];
    std::vector<std::pair<int, double>> row;
    for (const int j : entry.cluster.members) {
      const auto it = nu_idx.find({j, size});
      if (it != nu_idx.end()) row.emplace_back(it->second, 1.0);
    }
    const auto it = mu_idx.find({entry.user, size});
    if (it != mu_idx.end()) row.emplace_back(it->second, 1.0);
    eq_rows.push_back(std::move(row));
    eq_rhs.push_back(entry.rate / rk);
  }
  for (const auto& [label, value] : alloc.lambda) {
    if (value <= kBoundaryTol) continue;  // inequality there, checked below
    std::vector<std::pair<int, double>> row;
    for (const auto& [key, idx] : nu_idx) {
      if (key.second == label) {
        row.emplace_back(idx, stations.at(key.first).users_per_rb(label));
      }
    }
    for (const auto& [key, idx] : mu_idx) {
      if (key.second == label) row.emplace_back(idx, 1.0);
    }
    if (theta_col >= 0) row.emplace_back(theta_col, -1.0);
    if (row.empty()) continue;
    eq_rows.push_back(std::move(row));
    eq_rhs.push_back(0.0);
  }
  for (int i = 0; i < unknowns; ++i) {
    eq_rows.push_back({{i, norm_slack_of[i]}});
    eq_rhs.push_back(0.0);
  }

  // Least squares with nonnegativity kept by dropping negative unknowns.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(std::max(unknowns, 1));
  if (unknowns > 0 && !eq_rows.empty()) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(eq_rows.size(), unknowns);
    Eigen::VectorXd b(eq_rows.size());
    for (std::size_t r = 0; r < eq_rows.size(); ++r) {
      for (const auto& [c, v] : eq_rows[r]) a(r, c) += v;
      b[r] = eq_rhs[r];
    }
    std::vector<char> dropped(unknowns, 0);
    for (int pass = 0; pass <= unknowns; ++pass) {
      Eigen::MatrixXd a_masked = a;
      for (int c = 0; c < unknowns; ++c) {
        if (dropped[c]) a_masked.col(c).setZero();
      }
      // Minimum-norm solution: unknowns untouched by any equation stay zero.
      w = a_masked.completeOrthogonalDecomposition().solve(b);
      for (int c = 0; c < unknowns; ++c) {
        if (dropped[c]) w[c] = 0.0;
      }
      int most_negative = -1;
      for (int c = 0; c < unknowns; ++c) {
        if (w[c] < -1e-10 &&
            (most_negative < 0 || w[c] < w[most_negative])) {
          most_negative = c;
        }
      }
      if (most_negative < 0) break;
      dropped[most_negative] = 1;
    }
    w = w.cwiseMax(0.0);
  }

  KktReport report;
  for (const auto& [key, slack] : bs_slack) {
    const auto it = nu_idx.find(key);
    report.nu[key] = it == nu_idx.end() ? 0.0 : w[it->second];
  }
  for (const auto& [key, slack] : user_slack) {
    const auto it = mu_idx.find(key);
    report.mu[key] = it == mu_idx.end() ? 0.0 : w[it->second];
  }
  report.theta = theta_col >= 0 ? w[theta_col] : 0.0;

  // Rows of near-empty partitions appear in no support equality, so the fit
  // leaves their multipliers at zero. The solver's own duals (when the
  // allocation carries them) are a valid completion; hand-built allocations
  // fall back to raising each user's multiplier to what its entries require.
  const bool have_solver_duals =
      !alloc.solver_nu.empty() || !alloc.solver_mu.empty();
  if (have_solver_duals) {
    for (auto& [key, nu] : report.nu) {
      if (alloc.lambda.at(key.second) <= kBoundaryTol) {
        const auto it = alloc.solver_nu.find(key);
        if (it != alloc.solver_nu.end()) nu = it->second;
      }
    }
    for (auto& [key, mu] : report.mu) {
      if (alloc.lambda.at(key.second) <= kBoundaryTol) {
        const auto it = alloc.solver_mu.find(key);
        if (it != alloc.solver_mu.end()) mu = it->second;
      }
    }
  } else {
    std::set<std::pair<int, int>> supported_user_sizes;
    for (std::size_t e = 0; e < alloc.x.size(); ++e) {
      const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
      if (alloc.x[e] > support_tol(entry.cluster.size())) {
        supported_user_sizes.insert({entry.user, entry.cluster.size()});
      }
    }
    for (std::size_t e = 0; e < alloc.x.size(); ++e) {
      const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
      const int size = entry.cluster.size();
      const std::pair<int, int> key{entry.user, size};
      if (entry.rate <= 0.0 || alloc.lambda.at(size) > kBoundaryTol ||
          supported_user_sizes.count(key) || !mu_idx.count(key)) {
        continue;
      }
      double nu_sum = 0.0;
      for (const int j : entry.cluster.members) {
        nu_sum += report.nu.at({j, size});
      }
      const double needed = entry.rate / alloc.throughput[entry.user] - nu_sum;
      report.mu[key] = std::max(report.mu[key], needed);
    }
  }

  // Worst violation of R_k >= r_kC / (sum nu + mu), relative, with equality
  // required on the support, plus the lambda equations and complementary
  // slackness.
  const auto evaluate = [&](const KktReport& rep) {
    double stationarity = 0.0;
    for (std::size_t e = 0; e < alloc.x.size(); ++e) {
      const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
      if (entry.rate <= 0.0) continue;
      const int size = entry.cluster.size();
      const double rk = alloc.throughput[entry.user];
      double q = rep.mu.at({entry.user, size});
      for (const int j : entry.cluster.members) {
        q += rep.nu.at({j, size});
      }
      const double target = entry.rate / rk;
      const double gap = alloc.x[e] > support_tol(size)
                             ? std::fabs(q - target)
                             : std::max(0.0, target - q);
      stationarity = std::max(stationarity, gap / target);
    }
    for (const auto& [label, value] : alloc.lambda) {
      double sum = 0.0;
      for (const auto& [key, nu] : rep.nu) {
        if (key.second == label) {
          sum += nu * stations.at(key.first).users_per_rb(label);
        }
      }
      for (const auto& [key, mu] : rep.mu) {
        if (key.second == label) sum += mu;
      }
      // At a boundary partition the lambda multiplier absorbs any shortfall,
      // so only overshoot counts there.
      const double diff = value > kBoundaryTol
                              ? std::fabs(sum - rep.theta)
                              : std::max(0.0, sum - rep.theta);
      stationarity = std::max(stationarity, diff / std::max(1.0, rep.theta));
    }
    double comp = 0.0;
    for (const auto& [key, nu] : rep.nu) {
      comp = std::max(comp, nu * bs_norm_slack(key));
    }
    for (const auto& [key, mu] : rep.mu) {
      comp = std::max(comp, mu * user_norm_slack(key));
    }
    comp = std::max(comp, rep.theta * std::max(0.0, 1.0 - lambda_sum));
    return std::pair<double, double>{stationarity, comp};
  };

  auto [stationarity, comp] = evaluate(report);
  // The support system does not pin multipliers on a degenerate dual face;
  // when the fit lands on a point that violates some inactive entry's
  // inequality, the solver's own certificate is the better recovery.
  if (have_solver_duals && stationarity > 1e-8) {
    KktReport alt;
    for (const auto& [key, slack] : bs_slack) {
      const auto it = alloc.solver_nu.find(key);
      alt.nu[key] = it == alloc.solver_nu.end() ? 0.0 : it->second;
    }
    for (const auto& [key, slack] : user_slack) {
      const auto it = alloc.solver_mu.find(key);
      alt.mu[key] = it == alloc.solver_mu.end() ? 0.0 : it->second;
    }
    alt.theta = alloc.solver_theta;
    const auto [alt_stationarity, alt_comp] = evaluate(alt);
    if (alt_stationarity < stationarity) {
      report = std::move(alt);
      stationarity = alt_stationarity;
      comp = alt_comp;
    }
  }
  report.stationarity_residual = stationarity;
  report.complementarity_residual = comp;
  return report;
}

Allocation unique_association(const Allocation& alloc,
                              const ClusterCatalog& catalog) {
  if (alloc.arch == Architecture::kMcs) {
    throw std::invalid_argument(
        "unique association applies to UCS/split allocations");
  }
  constexpr double kSupportTol = 1e-6;
  Allocation out = alloc;
  // (user, partition) -> best entry by activity, ties to the
  // lexicographically smallest member list.
  std::map<std::pair<int, int>, int> best;
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    const std::pair<int, int> key{entry.user, alloc.partition_of_entry[e]};
    const auto it = best.find(key);
    if (it == best.end()) {
      best[key] = static_cast<int>(e);
      continue;
    }
    const double incumbent = alloc.x[it->second];
    if (alloc.x[e] > incumbent ||
        (alloc.x[e] == incumbent &&
         entry.cluster < catalog.entry(it->second).cluster)) {
      it->second = static_cast<int>(e);
    }
  }
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    const std::pair<int, int> key{entry.user, alloc.partition_of_entry[e]};
    if (best.at(key) != static_cast<int>(e) || alloc.x[e] <= kSupportTol) {
      out.x[e] = 0.0;
    }
  }
  std::vector<double> totals(catalog.num_users(), 0.0);
  for (std::size_t e = 0; e < out.x.size(); ++e) {
    totals[catalog.entry(static_cast<int>(e)).user] += out.x[e];
  }
  finish_allocation(out, catalog);
  out.unserved.clear();
  for (int k = 0; k < catalog.num_users(); ++k) {
    if (totals[k] <= 0.0) out.unserved.push_back(k);
  }
  return out;
}

std::map<int, FractionalCount> fractional_user_count(const Allocation& alloc,
                                                     const ClusterCatalog& catalog,
                                                     double tol_support) {
  std::map<int, FractionalCount> out;
  // Per-partition per-user loads and support.
  std::map<std::pair<int, int>, double> user_load;
  std::map<std::pair<int, int>, int> user_support;
  std::map<int, std::set<Cluster>> supported;
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    const int label = alloc.partition_of_entry[e];
    user_load[{entry.user, label}] += alloc.x[e];
    if (alloc.x[e] > tol_support) {
      user_support[{entry.user, label}]++;
      supported[label].insert(entry.cluster);
    }
  }
  for (const auto& [label, value] : alloc.lambda) {
    if (alloc.arch == Architecture::kSplit && label == kMacroBandPartition) {
      continue;
    }
    FractionalCount count;
    count.applicable = true;
    for (const auto& [key, load] : user_load) {
      if (key.second != label) continue;
      if (value - load <= kActiveTol * std::max(1.0, value)) {
        count.applicable = false;  // hypothesis of the bound fails
        break;
      }
    }
    count.supported_clusters =
        supported.count(label) ? static_cast<int>(supported[label].size()) : 0;
    for (const auto& [key, n] : user_support) {
      if (key.second == label && n >= 2) count.fractional_users++;
    }
    out[label] = count;
  }
  return out;
}

std::string allocation_to_json(const Allocation& alloc,
                               const ClusterCatalog& catalog) {
  nlohmann::json j;
  for (const auto& [label, value] : alloc.lambda) {
    j["lambda"][std::to_string(label)] = value;
  }
  j["x"] = nlohmann::json::array();
  for (std::size_t e = 0; e < alloc.x.size(); ++e) {
    const CatalogEntry& entry = catalog.entry(static_cast<int>(e));
    j["x"].push_back({{"user", entry.user},
                      {"cluster", entry.cluster.members},
                      {"value", alloc.x[e]}});
  }
  for (const McsCellEntry& cell : alloc.mcs_cell) {
    j["mcs_cellular"].push_back({{"user", cell.user},
                                 {"bs", cell.bs},
                                 {"partition", cell.partition},
                                 {"value", cell.value}});
  }
  j["objective"] = alloc.objective;
  j["residuals"] = {{"feasibility", alloc.feasibility_residual},
                    {"duality_gap", alloc.duality_gap}};
  if (!alloc.orphans.empty()) j["orphans"] = alloc.orphans;
  if (!alloc.unserved.empty()) j["unserved"] = alloc.unserved;
  return j.dump(2);
}

void save_allocation_json(const Allocation& alloc, const ClusterCatalog& catalog,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << allocation_to_json(alloc, catalog) << '\n';
}

}  // namespace dmimo
