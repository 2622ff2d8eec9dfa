#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dmimo/rates.hpp"

namespace dmimo {

struct GridOracleResult {
  double objective = 0.0;  // best utility over the feasible grid lattice
  std::vector<double> x;   // aligned with catalog entries
  std::map<int, double> lambda;
  std::int64_t leaves = 0;  // grid points evaluated
};

// Exhaustive grid search over the UCS feasibility polytope at the given step
// (activities and lambdas on multiples of step). The search walks the
// sum-lambda = 1 face, which attains the grid optimum: any grid point with
// spare lambda budget stays feasible when the spare is handed to some
// partition. Activity variables whose constraint rows provably never bind
// are pinned at their per-user cap before the walk; the rest are enumerated
// depth-first with integer-exact row pruning.
//
// Intended for tiny instances (about six free activity variables); throws
// when the walk would exceed max_leaves.
GridOracleResult grid_search_ucs(const ClusterCatalog& catalog,
                                 const std::vector<BaseStation>& stations,
                                 double step = 0.02,
                                 std::int64_t max_leaves = 4'000'000'000);

}  // namespace dmimo
