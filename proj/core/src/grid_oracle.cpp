#include "dmimo/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace dmimo {

namespace {

struct TickRow {
  std::vector<int> vars;  // free-variable slots touching this row
  std::int64_t bound = 0;  // in ticks, fixed for the current lambda
  std::int64_t load = 0;
};

struct Walker {
  const ClusterCatalog* catalog = nullptr;
  double step = 0.0;
  std::int64_t max_leaves = 0;
  std::int64_t leaves = 0;

  std::vector<int> free_entries;          // catalog entry per free slot
  std::vector<std::int64_t> caps;         // per-slot cap in ticks
  std::vector<std::vector<int>> rows_of;  // slot -> row indices
  std::vector<TickRow> rows;
  std::vector<double> base_rate;   // per user, from pinned entries
  std::vector<bool> user_served;   // has any positive-rate candidate
  std::vector<int> last_slot_of_user;
  std::vector<std::int64_t> assignment;

  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> best_assignment;

  // Depth-first over slots; partial utility carries the finished users.
  void walk(std::size_t slot, std::vector<double>& rate, double utility) {
    if (slot == free_entries.size()) {
      ++leaves;
      if (leaves > max_leaves) {
        throw std::runtime_error("grid oracle budget exceeded");
      }
      if (utility > best) {
        best = utility;
        best_assignment = assignment;
      }
      return;
    }
    const int entry_idx = free_entries[slot];
    const CatalogEntry& entry = catalog->entry(entry_idx);
    const int user = entry.user;
    std::int64_t cap = caps[slot];
    for (const int r : rows_of[slot]) {
      cap = std::min(cap, rows[r].bound - rows[r].load);
    }
    const double saved = rate[user];
    const bool closes_user =
        static_cast<int>(slot) == last_slot_of_user[user];
    for (std::int64_t v = 0; v <= cap; ++v) {
      assignment[slot] = v;
      for (const int r : rows_of[slot]) rows[r].load += v;
      rate[user] = saved + v * step * entry.rate;
      double u = utility;
      bool ok = true;
      if (closes_user && user_served[user]) {
        if (rate[user] > 0.0) {
          u += std::log(rate[user]);
        } else {
          ok = false;  // a served user with zero throughput is never optimal
        }
      }
      if (ok) walk(slot + 1, rate, u);
      for (const int r : rows_of[slot]) rows[r].load -= v;
    }
    rate[user] = saved;
    assignment[slot] = 0;
  }
};

}  // namespace

GridOracleResult grid_search_ucs(const ClusterCatalog& catalog,
                                 const std::vector<BaseStation>& stations,
                                 double step, std::int64_t max_leaves) {
  const int ticks = static_cast<int>(std::llround(1.0 / step));
  if (ticks < 1 || std::fabs(ticks * step - 1.0) > 1e-12) {
    throw std::invalid_argument("step must divide 1 exactly");
  }
  const int l_max = catalog.l_max();
  const int num_entries = static_cast<int>(catalog.entries().size());

  // Row memberships (independent of lambda).
  std::map<std::pair<int, int>, std::vector<int>> per_bs;   // (j, L)
  std::map<std::pair<int, int>, std::vector<int>> per_user;  // (k, L)
  for (int e = 0; e < num_entries; ++e) {
    const CatalogEntry& entry = catalog.entry(e);
    per_user[{entry.user, entry.cluster.size()}].push_back(e);
    for (const int j : entry.cluster.members) {
      per_bs[{j, entry.cluster.size()}].push_back(e);
    }
  }

  // An entry can be pinned at its per-user cap when it is the only size-L
  // candidate of its user and every BS row it touches can hold all of its
  // members at their caps simultaneously.
  std::vector<bool> pinned(num_entries, false);
  for (int e = 0; e < num_entries; ++e) {
    const CatalogEntry& entry = catalog.entry(e);
    const int size = entry.cluster.size();
    if (per_user.at({entry.user, size}).size() != 1) continue;
    bool slack = true;
    for (const int j : entry.cluster.members) {
      const auto& row = per_bs.at({j, size});
      bool all_sole = true;
      for (const int other : row) {
        if (per_user.at({catalog.entry(other).user, size}).size() != 1) {
          all_sole = false;
          break;
        }
      }
      if (!all_sole ||
          static_cast<int>(row.size()) > stations.at(j).users_per_rb(size)) {
        slack = false;
        break;
      }
    }
    pinned[e] = slack;
  }

  GridOracleResult result;
  result.x.assign(num_entries, 0.0);
  result.objective = -std::numeric_limits<double>::infinity();

  // Enumerate lambda compositions on the sum = 1 face.
  std::vector<int> lambda_ticks(l_max + 1, 0);
  std::vector<double> rate(catalog.num_users());

  const auto evaluate_lambda = [&]() {
    Walker walker;
    walker.catalog = &catalog;
    walker.step = step;
    walker.max_leaves = max_leaves;

    walker.base_rate.assign(catalog.num_users(), 0.0);
    for (int e = 0; e < num_entries; ++e) {
      if (!pinned[e]) continue;
      const CatalogEntry& entry = catalog.entry(e);
      walker.base_rate[entry.user] +=
          lambda_ticks[entry.cluster.size()] * step * entry.rate;
    }

    std::vector<int> slot_of(num_entries, -1);
    for (int e = 0; e < num_entries; ++e) {
      if (pinned[e]) continue;
      slot_of[e] = static_cast<int>(walker.free_entries.size());
      walker.free_entries.push_back(e);
      walker.caps.push_back(lambda_ticks[catalog.entry(e).cluster.size()]);
    }
    walker.rows_of.resize(walker.free_entries.size());

    const auto add_row = [&](const std::vector<int>& entries,
                             std::int64_t bound_ticks) {
      TickRow row;
      std::int64_t pinned_load = 0;
      for (const int e : entries) {
        if (pinned[e]) {
          pinned_load += lambda_ticks[catalog.entry(e).cluster.size()];
        } else {
          row.vars.push_back(slot_of[e]);
        }
      }
      row.bound = bound_ticks - pinned_load;
      if (row.vars.empty()) {
        if (row.bound < 0) throw std::logic_error("pinning broke feasibility");
        return;
      }
      const int idx = static_cast<int>(walker.rows.size());
      for (const int slot : row.vars) walker.rows_of[slot].push_back(idx);
      walker.rows.push_back(std::move(row));
    };
    for (const auto& [key, entries] : per_bs) {
      add_row(entries, static_cast<std::int64_t>(
                           stations.at(key.first).users_per_rb(key.second)) *
                           lambda_ticks[key.second]);
    }
    for (const auto& [key, entries] : per_user) {
      add_row(entries, lambda_ticks[key.second]);
    }

    walker.user_served.resize(catalog.num_users());
    for (int k = 0; k < catalog.num_users(); ++k) {
      walker.user_served[k] = catalog.user_served(k);
    }
    // Users untouched by free slots are finished before the walk starts.
    walker.last_slot_of_user.assign(catalog.num_users(), -1);
    for (std::size_t s = 0; s < walker.free_entries.size(); ++s) {
      walker.last_slot_of_user[catalog.entry(walker.free_entries[s]).user] =
          static_cast<int>(s);
    }
    double utility = 0.0;
    bool feasible = true;
    for (int k = 0; k < catalog.num_users(); ++k) {
      rate[k] = walker.base_rate[k];
      if (walker.last_slot_of_user[k] >= 0) continue;
      if (!catalog.user_served(k)) continue;  // orphan, excluded
      if (rate[k] <= 0.0) {
        feasible = false;  // served user stuck at zero under this lambda
        break;
      }
      utility += std::log(rate[k]);
    }
    if (!feasible) return;

    walker.assignment.assign(walker.free_entries.size(), 0);
    walker.leaves = 0;
    walker.walk(0, rate, utility);
    result.leaves += walker.leaves;

    if (walker.best > result.objective) {
      result.objective = walker.best;
      for (int size = 1; size <= l_max; ++size) {
        result.lambda[size] = lambda_ticks[size] * step;
      }
      std::fill(result.x.begin(), result.x.end(), 0.0);
      for (int e = 0; e < num_entries; ++e) {
        if (pinned[e]) {
          result.x[e] = lambda_ticks[catalog.entry(e).cluster.size()] * step;
        }
      }
      for (std::size_t s = 0; s < walker.free_entries.size(); ++s) {
        result.x[walker.free_entries[s]] = walker.best_assignment[s] * step;
      }
    }
  };

  // Compositions of `ticks` into l_max parts.
  const auto enumerate = [&](auto&& self, int size, int remaining) -> void {
    if (size == l_max) {
      lambda_ticks[size] = remaining;
      evaluate_lambda();
      return;
    }
    for (int t = 0; t <= remaining; ++t) {
      lambda_ticks[size] = t;
      self(self, size + 1, remaining - t);
    }
  };
  enumerate(enumerate, 1, ticks);
  return result;
}

}  // namespace dmimo
