#include <algorithm>
#include <set>

#include "doctest.h"
#include "lanealloc/allocator.hpp"
#include "lanealloc/baselines.hpp"
#include "support.hpp"

using namespace lanealloc;

TEST_CASE("rounding fixes k streets per LP solve") {
  const auto inst = testing::synthetic(15, 4);
  const LaneDigraph dg(inst.graph);
  const int m = static_cast<int>(inst.graph.num_streets());
  RunStats stats;
  RoundingOptions opts;
  opts.stats = &stats;
  std::vector<RoundingProgress> seen;
  opts.progress = [&](const RoundingProgress& p) {
    seen.push_back(p);
    return true;
  };
  const auto designs = round_and_refix(dg, inst.od, 2.0, 10, {}, opts);
  const int batches = (m + 9) / 10;
  CHECK(static_cast<int>(designs.size()) == batches);
  CHECK(stats.lp_solves == batches);
  REQUIRE(!seen.empty());
  CHECK(seen.back().streets_fixed == m);
  for (std::size_t i = 1; i < seen.size(); ++i) {
    CHECK(seen[i].streets_fixed > seen[i - 1].streets_fixed);
  }
  int prev_bike = -1;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const NetworkDesign& d = designs[i];
    CHECK(design_violations(d, dg).empty());
    CHECK(d.provenance.algorithm == "optimize");
    CHECK(d.provenance.gamma == 2.0);
    CHECK(d.provenance.k == 10);
    CHECK(d.provenance.iteration == static_cast<int>(i));
    // Bike decisions are never undone.
    CHECK(d.num_bike_streets() >= prev_bike);
    prev_bike = d.num_bike_streets();
  }
}

TEST_CASE("rounding honors fixed lanes") {
  const auto inst = testing::synthetic(15, 6);
  const LaneDigraph dg(inst.graph);
  const FixedSet fixed{{inst.graph.street(2).id, LaneMode::kBike, 1},
                       {inst.graph.street(5).id, LaneMode::kCar, 2}};
  for (const auto& d : round_and_refix(dg, inst.od, 1.0, 5, fixed)) {
    CHECK(d.streets[2].bike == 1);
    CHECK(d.streets[5].bike == 0);
    CHECK(d.streets[5].car_fwd + d.streets[5].car_bwd == 2);
  }
  // A fixed bike lane on a bridge would disconnect the cars.
  const StreetGraph bb = testing::barbell(2);
  const LaneDigraph bdg(bb);
  const OdMatrix od = testing::demand(bb, {{0, 5}});
  CHECK_THROWS_AS(round_and_refix(bdg, od, 1.0, 1, {{7, LaneMode::kBike, 2}}), InvalidInstance);
}

TEST_CASE("cancellation stops between solves") {
  const auto inst = testing::synthetic(15, 7);
  const LaneDigraph dg(inst.graph);
  RoundingOptions opts;
  int calls = 0;
  opts.progress = [&](const RoundingProgress&) { return ++calls < 2; };
  CHECK_THROWS_AS(round_and_refix(dg, inst.od, 1.0, 3, {}, opts), Cancelled);
  CHECK(calls == 2);
}

TEST_CASE("pareto run pools gammas") {
  const auto inst = testing::synthetic(12, 3, 0.2);
  const LaneDigraph dg(inst.graph);
  const RunResult r = pareto_run(dg, inst.od, {1.0, 8.0}, 20);
  REQUIRE(r.points.size() == r.designs.size());
  std::set<double> gammas;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    CHECK(r.points[i].design_index == static_cast<int>(i));
    gammas.insert(r.designs[i].provenance.gamma);
  }
  CHECK(gammas == std::set<double>{1.0, 8.0});
  const DesignTimes ref = evaluate_times(all_car_design(dg), dg, inst.od);
  CHECK(r.reference.car == doctest::Approx(ref.car));
  CHECK(r.frontier.size() == pareto_filter(r.points).size());
  for (const auto& p : r.frontier) {
    const ParetoPoint again = evaluate_design(r.designs[p.design_index], dg, inst.od, ref);
    CHECK(again.bike_pct == doctest::Approx(p.bike_pct));
    CHECK(again.car_pct == doctest::Approx(p.car_pct));
  }
}

TEST_CASE("brute force finds the optimum") {
  // A 4-cycle: 6^4 allocations.
  const StreetGraph g = testing::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const LaneDigraph dg(g);
  const OdMatrix od = testing::demand(g, {{0, 2}, {3, 1}});
  CHECK(enumeration_size(g) == 1296);
  for (double gamma : {0.5, 1.0, 8.0}) {
    const OracleResult best = brute_force_optimum(dg, od, gamma);
    // Independent sweep over every allocation.
    const std::vector<StreetAllocation> options{{2, 0, 0}, {1, 1, 0}, {0, 2, 0},
                                                {1, 0, 1}, {0, 1, 1}, {0, 0, 2}};
    double expect = INFINITY;
    NetworkDesign d;
    d.streets.resize(4);
    for (int code = 0; code < 1296; ++code) {
      int c = code;
      for (int s = 0; s < 4; ++s, c /= 6) d.streets[s] = options[c % 6];
      if (!design_violations(d, dg).empty()) continue;
      expect = std::min(expect, design_objective(evaluate_times(d, dg, od), gamma));
    }
    CHECK(best.objective == doctest::Approx(expect).epsilon(1e-12));
    CHECK(design_violations(best.design, dg).empty());
  }
  const RunResult f = brute_force_frontier(dg, od, {1.0, 2.0});
  CHECK(f.designs.size() == 2);
  CHECK(f.designs[0].provenance.algorithm == "oracle");
}

TEST_CASE("enumeration size") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0, 1.0, 0.0, 1}});
  CHECK(enumeration_size(g) == 6 * 6 * 3);
  const auto big = testing::synthetic(20, 1);
  CHECK(enumeration_size(big.graph) > kMaxEnumeration);
}

TEST_CASE("LP relaxation bounds the rounded designs from below") {
  const auto inst = testing::synthetic(12, 9, 0.2);
  const LaneDigraph dg(inst.graph);
  const RelaxedSolution r = solve_relaxed(dg, inst.od, 1.0);
  REQUIRE(r.solution.optimal());
  for (const auto& d : round_and_refix(dg, inst.od, 1.0, 4)) {
    CHECK(design_objective(evaluate_times(d, dg, inst.od), 1.0) >= r.solution.objective - 1e-9);
  }
  const LpSolution again = solve_with_capacities(dg, inst.od, 1.0, r.caps);
  REQUIRE(again.optimal());
  CHECK(again.objective == doctest::Approx(r.solution.objective).epsilon(1e-7));
}

TEST_CASE("baselines") {
  const auto inst = testing::synthetic(15, 2);
  const LaneDigraph dg(inst.graph);
  const int m = static_cast<int>(inst.graph.num_streets());

  SUBCASE("top down") {
    const auto ds = run_baseline(dg, inst.od, {BaselineKind::kTopDown, 10.0});
    REQUIRE(static_cast<int>(ds.size()) == m + 1);
    CHECK(ds.front().num_bike_streets() == m);
    CHECK(ds.back().num_bike_streets() == 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(ds[i].provenance.car_speed_override_kmh == 10.0);
      CHECK(ds[i].num_bike_streets() == m - static_cast<int>(i));
      CHECK(design_violations(ds[i], dg).empty());
    }
    // Bike streets are open to slow cars.
    const auto w = design_car_weights(ds.front(), dg);
    CHECK(*w[0] == doctest::Approx(dg.arc(0).length_km / 10.0));
  }
  SUBCASE("bottom up") {
    for (BaselineKind kind : {BaselineKind::kBottomUpCar, BaselineKind::kBottomUpBike}) {
      const auto ds = run_baseline(dg, inst.od, {kind, 10.0});
      REQUIRE(ds.size() >= 2);
      CHECK(ds.front().num_bike_streets() == 0);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds[i].num_bike_streets() == static_cast<int>(i));
        CHECK(design_violations(ds[i], dg).empty());
      }
      // Stops only when no further street can lose its car lanes.
      const NetworkDesign& last = ds.back();
      for (StreetIndex s = 0; s < m; ++s) {
        if (last.streets[s].bike > 0) continue;
        NetworkDesign next = last;
        next.streets[s] = {0, 0, 1};
        CHECK_FALSE(design_violations(next, dg).empty());
      }
    }
  }
  CHECK(baseline_from_string("bottom_up_bike") == BaselineKind::kBottomUpBike);
  CHECK_THROWS(baseline_from_string("sideways"));
}
