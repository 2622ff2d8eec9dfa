#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmimo/scheduler.hpp"
#include "test_util.hpp"

using namespace dmimo;
using test::make_gains;
using test::make_stations;

namespace {

// Hand-built allocation over a hand-built catalog: one entry per (user,
// cluster) with the given partition and activity.
struct Bench {
  ClusterCatalog catalog;
  Allocation alloc;

  Bench(int users, int l_max) : catalog(users, l_max) {
    alloc.arch = Architecture::kUcs;
  }
  void add(int user, Cluster cluster, double rate, int partition, double x) {
    catalog.add(user, cluster, rate);
    alloc.x.push_back(x);
    alloc.partition_of_entry.push_back(partition);
  }
};

// Four reference RBs over 4 BSs with S(1)=2, S(2)=3: all-cellular,
// disjoint pairs, overlapping pairs, and a mixed pair+cellular RB.
std::vector<BaseStation> example_rb_stations() {
  return make_stations(4, 100, {{1, 2}, {2, 3}});
}

Schedule example_rb(int which) {
  Schedule s;
  s.horizon = 1;
  s.rbs.resize(1);
  switch (which) {
    case 1:
      s.rb_partition = {1};
      s.rbs[0] = {{Cluster({0}), {0, 1}},
                  {Cluster({1}), {2, 3}},
                  {Cluster({2}), {4, 5}},
                  {Cluster({3}), {6, 7}}};
      break;
    case 2:
      s.rb_partition = {2};
      s.rbs[0] = {{Cluster({0, 1}), {0, 1, 2}}, {Cluster({2, 3}), {3, 4, 5}}};
      break;
    case 3:
      s.rb_partition = {2};
      s.rbs[0] = {{Cluster({0, 1}), {0}}, {Cluster({0, 2}), {1}},
                  {Cluster({0, 3}), {2}}, {Cluster({1, 2}), {3}},
                  {Cluster({1, 3}), {4}}, {Cluster({2, 3}), {5}}};
      break;
    case 4:
      s.rb_partition = {2};
      s.rbs[0] = {{Cluster({0, 1}), {0, 1, 2}},
                  {Cluster({2}), {3, 4}},
                  {Cluster({3}), {5, 6}}};
      break;
  }
  return s;
}

}  // namespace

TEST_CASE("largest-remainder apportionment") {
  CHECK(apportion_partitions({{1, 0.5}, {2, 0.5}}, 4) ==
        std::vector<int>{1, 2, 1, 2});
  {
    const auto labels = apportion_partitions({{1, 0.3}, {2, 0.7}}, 10);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 3);
    CHECK(std::count(labels.begin(), labels.end(), 2) == 7);
  }
  {
    const auto labels =
        apportion_partitions({{1, 1.0 / 3.0}, {2, 2.0 / 3.0}}, 4);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 1);
    CHECK(std::count(labels.begin(), labels.end(), 2) == 3);
  }
  // Unallocated remainder flows to the largest lambda.
  {
    const auto labels = apportion_partitions({{1, 0.2}, {2, 0.5}}, 10);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 2);
    CHECK(std::count(labels.begin(), labels.end(), 2) == 8);
  }
  CHECK(apportion_partitions({}, 5).empty());
}

TEST_CASE("virtual queue update rule") {
  VirtualQueueState state;
  state.target_rate = {2.0};
  state.a_max = 1.0;

  SUBCASE("drain by the target rate when scheduled") {
    state.q = {5.0};
    state.v = 0.0;  // arrivals off
    vq_step(state, {0});
    CHECK(state.q[0] == 3.0);
  }
  SUBCASE("clamped at zero") {
    state.q = {1.0};
    state.v = 0.0;
    vq_step(state, {0});
    CHECK(state.q[0] == 0.0);
  }
  SUBCASE("every queue gains a_max while the gate is open") {
    state.target_rate = {2.0, 2.0};
    state.q = {1.0, 4.0};
    state.v = 100.0;
    vq_step(state, {});
    CHECK(state.q[0] == 2.0);
    CHECK(state.q[1] == 5.0);
  }
  SUBCASE("the gate compares V against the pre-update total") {
    state.target_rate = {2.0, 2.0};
    state.q = {3.0, 3.0};
    state.v = 6.0;  // not strictly above, so no arrivals
    vq_step(state, {0});
    CHECK(state.q[0] == 1.0);
    CHECK(state.q[1] == 3.0);
  }
}

TEST_CASE("greedy WSRM admission") {
  SUBCASE("one BS, S(1)=2: top two weights admitted") {
    const auto admitted =
        greedy_wsrm({9.0, 5.0, 3.0}, {0, 1, 2},
                    {Cluster({0}), Cluster({0}), Cluster({0})}, {{0, 2}});
    CHECK(admitted == std::vector<int>{0, 1});
  }
  SUBCASE("pair cluster, S_j(2)=2: third user blocked at both BSs") {
    const Cluster pair({0, 1});
    const auto admitted = greedy_wsrm({10.0, 8.0, 6.0}, {0, 1, 2},
                                      {pair, pair, pair}, {{0, 2}, {1, 2}});
    CHECK(admitted == std::vector<int>{0, 1});
  }
  SUBCASE("empty eligible set") {
    CHECK(greedy_wsrm({}, {}, {}, {}).empty());
  }
  SUBCASE("weight ties break toward the smaller user id") {
    const auto admitted =
        greedy_wsrm({4.0, 4.0, 4.0}, {5, 3, 9},
                    {Cluster({0}), Cluster({0}), Cluster({0})}, {{0, 1}});
    REQUIRE(admitted.size() == 1);
    CHECK(admitted[0] == 1);  // user 3
  }
}

TEST_CASE("single user at alpha = 0.5 is served half the RBs") {
  Bench bench(1, 1);
  bench.add(0, Cluster({0}), 2.0, 1, 0.5);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 1000);
  CHECK(schedule.realized_x[0] == doctest::Approx(0.5).epsilon(0.01));
  CHECK(validate_schedule(schedule, stations, Architecture::kUcs).empty());
}

TEST_CASE("slack feasible targets are tracked within 1 percent") {
  // One BS, S(1)=2, three users with total demand 1.2 < 2.
  Bench bench(3, 1);
  bench.add(0, Cluster({0}), 3.0, 1, 0.5);
  bench.add(1, Cluster({0}), 2.0, 1, 0.4);
  bench.add(2, Cluster({0}), 1.0, 1, 0.3);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const int horizon = 10000;
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, horizon);
  const double targets[] = {0.5, 0.4, 0.3};
  for (int e = 0; e < 3; ++e) {
    CHECK(std::fabs(schedule.realized_x[e] - targets[e]) <=
          0.01 * targets[e]);
  }
  CHECK(validate_schedule(schedule, stations, Architecture::kUcs).empty());
}

TEST_CASE("two partitions track their targets") {
  Bench bench(3, 2);
  bench.add(0, Cluster({0}), 3.0, 1, 0.3);      // alpha 0.6 of lambda_1
  bench.add(1, Cluster({0, 1}), 5.0, 2, 0.25);  // alpha 0.5 of lambda_2
  bench.add(2, Cluster({0, 1}), 4.0, 2, 0.2);   // alpha 0.4
  bench.alloc.lambda = {{1, 0.5}, {2, 0.5}};
  const auto stations = make_stations(2, 100, {{1, 2}, {2, 3}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 10000);
  CHECK(schedule.realized_x[0] == doctest::Approx(0.3).epsilon(0.01));
  CHECK(schedule.realized_x[1] == doctest::Approx(0.25).epsilon(0.01));
  CHECK(schedule.realized_x[2] == doctest::Approx(0.2).epsilon(0.01));
  CHECK(validate_schedule(schedule, stations, Architecture::kUcs).empty());
}

TEST_CASE("throughput accounting identity") {
  Bench bench(2, 1);
  bench.add(0, Cluster({0}), 3.0, 1, 0.7);
  bench.add(1, Cluster({0}), 2.0, 1, 0.6);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 4000);
  for (int k = 0; k < 2; ++k) {
    double expected = 0.0;
    for (const int e : bench.catalog.entries_of(k)) {
      expected += schedule.realized_x[e] * bench.catalog.entry(e).rate;
    }
    CHECK(schedule.throughput[k] == expected);  // same arithmetic path
  }
}

TEST_CASE("realized fractions satisfy the NUM constraints") {
  Bench bench(4, 2);
  bench.add(0, Cluster({0}), 3.0, 1, 0.5);
  bench.add(1, Cluster({0}), 2.5, 1, 0.5);
  bench.add(2, Cluster({0, 1}), 5.0, 2, 0.4);
  bench.add(3, Cluster({0, 1}), 4.5, 2, 0.4);
  bench.alloc.lambda = {{1, 0.4}, {2, 0.6}};
  const auto stations = make_stations(2, 100, {{1, 2}, {2, 3}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 5000);

  Allocation realized = bench.alloc;
  realized.x = schedule.realized_x;
  realized.lambda = schedule.realized_lambda;
  CHECK(allocation_max_violation(realized, bench.catalog, stations) <= 1e-9);
}

TEST_CASE("queue lengths stay bounded on feasible targets") {
  Bench bench(3, 1);
  bench.add(0, Cluster({0}), 3.0, 1, 2.0 / 3.0);
  bench.add(1, Cluster({0}), 2.0, 1, 2.0 / 3.0);
  bench.add(2, Cluster({0}), 1.0, 1, 2.0 / 3.0);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 100000);
  for (const double q : schedule.max_queue) {
    CHECK(q < 100.0);  // recorded bound, far below the horizon scale
  }
  MESSAGE("max queue over 1e5 RBs: ", schedule.max_queue[0], ", ",
          schedule.max_queue[1], ", ", schedule.max_queue[2]);
}

TEST_CASE("deterministic schedules") {
  Bench bench(3, 1);
  bench.add(0, Cluster({0}), 3.0, 1, 0.5);
  bench.add(1, Cluster({0}), 2.0, 1, 0.5);
  bench.add(2, Cluster({0}), 1.0, 1, 0.5);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const Schedule a = run_schedule(bench.alloc, bench.catalog, stations, 2000);
  const Schedule b = run_schedule(bench.alloc, bench.catalog, stations, 2000);
  CHECK(a.realized_x == b.realized_x);
  CHECK(a.rb_partition == b.rb_partition);
  for (int t = 0; t < a.horizon; ++t) {
    REQUIRE(a.rbs[t].size() == b.rbs[t].size());
    for (std::size_t c = 0; c < a.rbs[t].size(); ++c) {
      CHECK(a.rbs[t][c].cluster == b.rbs[t][c].cluster);
      CHECK(a.rbs[t][c].users == b.rbs[t][c].users);
    }
  }
}

TEST_CASE("pilot dimensions on the reference RBs") {
  CHECK(pilot_dimensions(example_rb(1).rbs[0]) == 8);
  CHECK(pilot_dimensions(example_rb(2).rbs[0]) == 6);
  CHECK(pilot_dimensions(example_rb(3).rbs[0]) == 6);
  CHECK(pilot_dimensions(example_rb(4).rbs[0]) == 7);
  CHECK(pilot_dimensions({}) == 0);
  CHECK(pilot_dimensions({{Cluster({0, 1, 2, 3}), {5}}}) == 1);
}

TEST_CASE("validator on the reference RBs") {
  const auto stations = example_rb_stations();
  CHECK(validate_schedule(example_rb(1), stations, Architecture::kUcs).empty());
  CHECK(validate_schedule(example_rb(2), stations, Architecture::kUcs).empty());
  CHECK(validate_schedule(example_rb(3), stations, Architecture::kUcs).empty());
  CHECK_FALSE(
      validate_schedule(example_rb(4), stations, Architecture::kUcs).empty());
  CHECK(validate_schedule(example_rb(4), stations, Architecture::kMcs).empty());
}

TEST_CASE("validator catches a user served by two clusters") {
  Schedule s;
  s.horizon = 1;
  s.rb_partition = {2};
  s.rbs = {{{Cluster({0, 1}), {0}}, {Cluster({2, 3}), {0}}}};
  CHECK_FALSE(
      validate_schedule(s, example_rb_stations(), Architecture::kUcs).empty());
}

TEST_CASE("validator catches an over-budget BS") {
  Schedule s;
  s.horizon = 1;
  s.rb_partition = {1};
  s.rbs = {{{Cluster({0}), {0, 1, 2}}}};  // S(1) = 2
  CHECK_FALSE(
      validate_schedule(s, example_rb_stations(), Architecture::kUcs).empty());
}

TEST_CASE("schedule CSV export") {
  Bench bench(1, 1);
  bench.add(0, Cluster({0}), 2.0, 1, 1.0);
  bench.alloc.lambda = {{1, 1.0}};
  const auto stations = make_stations(1, 100, {{1, 2}});
  const Schedule schedule =
      run_schedule(bench.alloc, bench.catalog, stations, 4);
  const std::string path =
      (std::filesystem::temp_directory_path() / "dmimo_sched_test.csv").string();
  schedule.save_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,L,cluster_members,user_id");
  std::filesystem::remove(path);
}

TEST_CASE("MCS schedule honors per-mode budgets") {
  // Pair cluster on BSs 0-1, cellular users on BSs 2-3 (the mixed reference
  // RB pattern as a long-run mix).
  const auto stations = example_rb_stations();
  ClusterCatalog catalog(7, 2);
  const Cluster pair({0, 1});
  for (int k = 0; k < 3; ++k) catalog.add(k, pair, 5.0);
  catalog.add(3, Cluster({2}), 4.0);
  catalog.add(4, Cluster({2}), 4.0);
  catalog.add(5, Cluster({3}), 4.0);
  catalog.add(6, Cluster({3}), 4.0);

  Allocation alloc;
  alloc.arch = Architecture::kMcs;
  alloc.x = {0.9, 0.9, 0.9, 0.0, 0.0, 0.0, 0.0};
  alloc.partition_of_entry = {2, 2, 2, 1, 1, 1, 1};
  alloc.lambda = {{2, 1.0}};
  for (int k = 3; k < 7; ++k) {
    const int bs = k < 5 ? 2 : 3;
    alloc.mcs_cell.push_back({k, bs, 2, 4.0, 0.9});
  }
  alloc.mcs_y = {{{0, 2}, 0.0}, {{1, 2}, 0.0}, {{2, 2}, 1.0}, {{3, 2}, 1.0}};

  const Schedule schedule = run_schedule_mcs(alloc, catalog, stations, 2000);
  CHECK(validate_schedule(schedule, stations, Architecture::kMcs).empty());
  for (int e = 0; e < 3; ++e) {
    CHECK(schedule.realized_x[e] == doctest::Approx(0.9).epsilon(0.05));
  }
  for (int k = 3; k < 7; ++k) {
    CHECK(schedule.throughput[k] == doctest::Approx(0.9 * 4.0).epsilon(0.05));
  }
}
