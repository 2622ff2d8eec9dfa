#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmimo/rates.hpp"

namespace dmimo {

enum class Architecture { kUcs, kMcs, kSplit };
enum class Utility { kLog };

// Partition labels: for UCS and MCS the label is the cluster size L. For the
// orthogonal-split scenario label 0 is the macro cellular band (fixed rho RB
// share) and labels >= 1 are the pico cluster-size partitions.
constexpr int kMacroBandPartition = 0;

struct McsCellEntry {
  int user = 0;
  int bs = 0;
  int partition = 0;  // the size-L partition this cellular activity lives in
  double rate = 0.0;  // cellular peak rate r_kj
  double value = 0.0;
};

struct Allocation {
  Architecture arch = Architecture::kUcs;
  // Activity fraction per catalog entry. For MCS these are the clustered
  // activities; cellular-mode activity is in mcs_cell.
  std::vector<double> x;
  std::vector<int> partition_of_entry;
  std::map<int, double> lambda;  // partition label -> RB fraction
  std::vector<McsCellEntry> mcs_cell;
  std::map<std::pair<int, int>, double> mcs_y;  // (bs, L) -> cellular share

  double objective = 0.0;  // sum over served users of ln(R_k)
  double feasibility_residual = 0.0;
  double duality_gap = 0.0;
  std::vector<int> orphans;    // users with no positive-rate candidate
  std::vector<int> unserved;   // set by unique_association
  std::vector<double> throughput;  // R_k per user, 0 for orphans

  // Constraint multipliers reported by the solver (UCS and cellular solves).
  // The KKT recovery falls back on these for rows of empty partitions, which
  // the support system leaves undetermined.
  std::map<std::pair<int, int>, double> solver_nu;  // (bs, L)
  std::map<std::pair<int, int>, double> solver_mu;  // (user, L)
  double solver_theta = 0.0;  // multiplier of sum_L lambda_L <= 1

  double user_rate(int user) const { return throughput.at(user); }
};

struct SolveOptions {
  double tol = 1e-9;  // certified duality gap at exit
};

// The UCS NUM: maximize sum_k ln(sum_C x_kC r_kC) subject to the per-BS and
// per-user partition constraints and sum_L lambda_L <= 1.
Allocation solve_ucs(const ClusterCatalog& catalog,
                     const std::vector<BaseStation>& stations,
                     Utility utility = Utility::kLog,
                     const SolveOptions& options = {});

// Cellular-only NUM (single-BS serving, no partitions): per-BS budget
// S_j(1), per-user budget 1. The catalog must contain only size-1 clusters.
Allocation solve_cellular(const ClusterCatalog& catalog,
                          const std::vector<BaseStation>& stations,
                          const SolveOptions& options = {});

// Mode pins for the mixed cluster-size NUM; kFree optimizes the per-BS
// cellular shares y_jL, the other two substitute the boundary values.
enum class McsMode { kFree, kZeroCellular, kAllCellular };

Allocation solve_mcs(const ClusterCatalog& catalog,
                     const std::vector<BaseStation>& stations,
                     McsMode mode = McsMode::kFree,
                     const SolveOptions& options = {});

struct SplitSolution {
  Allocation alloc;
  ClusterCatalog catalog;  // macro entries first, then pico entries
};

// Orthogonal macro/pico split: macros run cellular on a fixed rho share of
// the RBs, picos run UCS on the remaining 1-rho. One joint convex program;
// rho = 1 degenerates to the macro-only cellular NUM.
SplitSolution solve_orthogonal_split(const ClusterCatalog& catalog_macro,
                                     const ClusterCatalog& catalog_pico,
                                     const std::vector<BaseStation>& stations,
                                     double rho,
                                     const SolveOptions& options = {});

// Max violation of the architecture's constraints (0 when feasible).
double allocation_max_violation(const Allocation& alloc,
                                const ClusterCatalog& catalog,
                                const std::vector<BaseStation>& stations);

struct KktReport {
  std::map<std::pair<int, int>, double> nu;  // (bs, L) -> multiplier
  std::map<std::pair<int, int>, double> mu;  // (user, L) -> multiplier
  double theta = 0.0;                        // multiplier of sum lambda <= 1
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
};

// Recovers multipliers by least squares on the active support and reports
// the worst violation of the stationarity condition
//   R_k >= r_kC / (sum_{j in C} nu_jL + mu_kL)
// (equality on the support) and of complementary slackness. UCS only.
KktReport kkt_residuals(const Allocation& alloc, const ClusterCatalog& catalog,
                        const std::vector<BaseStation>& stations);

// Unique-association projection: per user and partition keep only the
// largest activity (ties: lexicographically smallest member list),
// zeroing the rest.
Allocation unique_association(const Allocation& alloc,
                              const ClusterCatalog& catalog);

struct FractionalCount {
  bool applicable = false;  // all per-user constraints slack for this L
  int fractional_users = 0;
  int supported_clusters = 0;  // N_L: size-L clusters with any support
};

// Users served by more than one size-L cluster at the optimum, per L.
std::map<int, FractionalCount> fractional_user_count(
    const Allocation& alloc, const ClusterCatalog& catalog,
    double tol_support = 1e-6);

std::string allocation_to_json(const Allocation& alloc,
                               const ClusterCatalog& catalog);
void save_allocation_json(const Allocation& alloc,
                          const ClusterCatalog& catalog,
                          const std::string& path);

}  // namespace dmimo
