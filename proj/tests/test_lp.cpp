#include <map>

#include "doctest.h"
#include "lanealloc/allocator.hpp"
#include "lanealloc/flow_solver.hpp"
#include "lanealloc/lp_model.hpp"
#include "lanealloc/lp_solver.hpp"
#include "support.hpp"

using namespace lanealloc;

namespace {

LpInstance two_by_two() {
  // min -x - y  s.t.  x + 2y <= 4,  3x + y <= 6,  x, y >= 0
  LpInstance lp;
  lp.num_cols = 2;
  lp.objective = {-1.0, -1.0};
  lp.col_lower = {0.0, 0.0};
  lp.col_upper = {INFINITY, INFINITY};
  lp.add_row({0, 1}, {1.0, 2.0}, RowSense::kLessEqual, 4.0);
  lp.add_row({0, 1}, {3.0, 1.0}, RowSense::kLessEqual, 6.0);
  return lp;
}

}  // namespace

TEST_CASE("small LP solved exactly") {
  const LpSolution s = solve(two_by_two());
  REQUIRE(s.optimal());
  CHECK(s.values[0] == doctest::Approx(1.6));
  CHECK(s.values[1] == doctest::Approx(1.2));
  CHECK(s.objective == doctest::Approx(-2.8));
  CHECK(primal_residual(two_by_two(), s.values) < 1e-9);
}

TEST_CASE("infeasible and unbounded LPs are reported") {
  LpInstance lp = two_by_two();
  lp.add_row({0}, {1.0}, RowSense::kEqual, -1.0);
  CHECK(solve(lp).status == SolveStatus::kInfeasible);

  LpInstance open;
  open.num_cols = 1;
  open.objective = {-1.0};
  open.col_lower = {0.0};
  open.col_upper = {INFINITY};
  open.add_row({0}, {-1.0}, RowSense::kLessEqual, 0.0);
  CHECK(solve(open).status == SolveStatus::kUnbounded);
}

TEST_CASE("pinning columns in a session") {
  LpSession session(two_by_two());
  REQUIRE(session.solve().optimal());
  session.pin(0, 0.0);
  const LpSolution s = session.solve();
  REQUIRE(s.optimal());
  CHECK(s.values[1] == doctest::Approx(2.0));
  CHECK(s.objective == doctest::Approx(-2.0));
  const LpSolution r = resolve_with_bounds(two_by_two(), {{0, 0.0}});
  CHECK(r.objective == doctest::Approx(-2.0));
}

TEST_CASE("triplet format round trip") {
  const LpInstance lp = two_by_two();
  const LpInstance back = lp_from_triplets(lp_to_triplets(lp));
  CHECK(back.num_cols == lp.num_cols);
  CHECK(back.num_rows() == lp.num_rows());
  CHECK(back.row_values == lp.row_values);
  CHECK(solve(back).objective == doctest::Approx(-2.8));
}

TEST_CASE("fixed lane validation") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0, 1.0, 0.0, 1}});
  CHECK(check_fixed({{1, LaneMode::kBike, 1}, {2, LaneMode::kCar, 2}}, g).empty());
  CHECK(check_fixed({{9, LaneMode::kBike, 1}}, g).size() == 1);
  CHECK(check_fixed({{1, LaneMode::kBike, 1}, {1, LaneMode::kCar, 1}}, g).size() == 1);
  CHECK(check_fixed({{3, LaneMode::kCar, 2}}, g).size() == 1);
  CHECK(check_fixed({{3, LaneMode::kBike, 2}}, g).size() == 1);
  CHECK(check_fixed({{1, LaneMode::kBike, -1}}, g).size() == 1);
  CHECK_THROWS_AS(validate_fixed({{9, LaneMode::kBike, 1}}, g), InvalidInstance);
}

TEST_CASE("model layout") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const LaneDigraph dg(g);
  const OdMatrix od = testing::demand(g, {{0, 2}});
  const LpModel m = build_lp(dg, od, ModelOptions{});
  const Dimensions d = dimensions(m.index, m.lp);
  // 4 pairs (1 demand, 3 auxiliary) x 6 arcs x 3 kinds, plus 2 capacities per arc.
  CHECK(d.flow_vars == 4 * 6 * 3);
  CHECK(d.cap_vars == 12);
  CHECK(d.columns == m.lp.num_cols);
  for (std::size_t p = 0; p < 4; ++p) {
    for (ArcId a = 0; a < 6; ++a) {
      for (FlowKind k : {FlowKind::kCar, FlowKind::kBike, FlowKind::kShared}) {
        const auto col = m.index.flow_column(p, a, k);
        REQUIRE(col);
        CHECK(m.index.is_flow(*col));
        const auto v = m.index.flow_var(*col);
        CHECK(v.pair == p);
        CHECK(v.arc == a);
        CHECK(v.kind == k);
      }
    }
  }
  const int c = m.index.cap_column(3, CapKind::kBike);
  CHECK_FALSE(m.index.is_flow(c));
  CHECK(m.index.cap_var(c).arc == 3);
  CHECK(m.index.cap_var(c).kind == CapKind::kBike);
}

TEST_CASE("restricting to eta neighbourhoods shrinks the model") {
  const auto inst = testing::synthetic(30, 2);
  const LaneDigraph dg(inst.graph);
  const auto full = dimensions(build_lp(dg, inst.od, ModelOptions{}).index,
                               build_lp(dg, inst.od, ModelOptions{}).lp);
  ModelOptions o;
  o.eta = 4;
  const LpModel local = build_lp(dg, inst.od, o);
  CHECK(dimensions(local.index, local.lp).flow_vars < full.flow_vars);
  CHECK(dimensions(local.index, local.lp).cap_vars == full.cap_vars);
}

// Column generation and the full model must agree on the optimum.
TEST_CASE("path and arc formulations agree") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = testing::synthetic(14, seed, 0.15);
    const LaneDigraph dg(inst.graph);
    ModelOptions o;
    o.gamma = static_cast<double>(seed);
    if (seed % 2 == 0) {
      o.fixed = {{inst.graph.street(0).id, LaneMode::kBike, 1},
                 {inst.graph.street(3).id, LaneMode::kCar, 1}};
    }
    const LpModel m = build_lp(dg, inst.od, o);
    const LpSolution arc = solve(m.lp);
    const LpSolution path = solve_flow_lp(dg, inst.od, m);
    REQUIRE(arc.optimal());
    REQUIRE(path.optimal());
    CHECK(path.objective == doctest::Approx(arc.objective).epsilon(1e-7));
    CHECK(path.values.size() == m.lp.num_cols);
    CHECK(primal_residual(m.lp, path.values) < 1e-6);
  }
}

TEST_CASE("pinned capacities agree between sessions") {
  const auto inst = testing::synthetic(14, 8, 0.15);
  const LaneDigraph dg(inst.graph);
  const LpModel m = build_lp(dg, inst.od, ModelOptions{2.0, {}, std::nullopt, true});
  FlowLpSession flow(dg, inst.od, m);
  std::map<int, double> pins;
  for (StreetIndex s = 0; s < 6; ++s) {
    for (ArcId a : {LaneDigraph::forward_arc(s), LaneDigraph::backward_arc(s)}) {
      pins[m.index.cap_column(a, CapKind::kBike)] = s % 2;
      pins[m.index.cap_column(a, CapKind::kCar)] = 1 - s % 2;
    }
  }
  for (auto [col, v] : pins) flow.pin(col, v);
  const LpSolution a = flow.solve();
  const LpSolution b = resolve_with_bounds(m.lp, pins);
  REQUIRE(a.optimal());
  REQUIRE(b.optimal());
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
  for (auto [col, v] : pins) CHECK(a.values[col] == doctest::Approx(v));
}

TEST_CASE("relaxed capacities respect every street") {
  const auto inst = testing::synthetic(16, 6);
  const LaneDigraph dg(inst.graph);
  const RelaxedSolution r = solve_relaxed(dg, inst.od, 1.0);
  REQUIRE(r.solution.optimal());
  for (StreetIndex s = 0; s < static_cast<StreetIndex>(inst.graph.num_streets()); ++s) {
    const ArcId f = LaneDigraph::forward_arc(s);
    const ArcId b = LaneDigraph::backward_arc(s);
    const double used =
        r.caps.car[f] + r.caps.car[b] + 0.5 * (r.caps.bike[f] + r.caps.bike[b]);
    CHECK(used <= inst.graph.street(s).capacity + 1e-7);
    CHECK(r.caps.bike[f] == doctest::Approx(r.caps.bike[b]));
    CHECK(r.caps.car[f] >= -1e-9);
  }
}
