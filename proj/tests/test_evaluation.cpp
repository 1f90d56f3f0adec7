#include <algorithm>
#include <random>

#include "doctest.h"
#include "lanealloc/design.hpp"
#include "lanealloc/evaluation.hpp"
#include "support.hpp"

using namespace lanealloc;

namespace {

ParetoPoint pt(double bike, double car) {
  ParetoPoint p;
  p.bike_pct = bike;
  p.car_pct = car;
  return p;
}

bool dominated(const ParetoPoint& a, const std::vector<ParetoPoint>& all) {
  for (const auto& b : all) {
    if (b.bike_pct <= a.bike_pct && b.car_pct <= a.car_pct &&
        (b.bike_pct < a.bike_pct || b.car_pct < a.car_pct)) {
      return true;
    }
  }
  return false;
}

// Midpoint-rule area of the union of dominated boxes, clipped at (0, 50).
double grid_area(const std::vector<ParetoPoint>& pts, double lo_bike) {
  const int cells = 1000;
  const double dx = (0.0 - lo_bike) / cells, dy = 50.0 / cells;
  long hits = 0;
  for (int i = 0; i < cells; ++i) {
    const double x = lo_bike + (i + 0.5) * dx;
    for (int j = 0; j < cells; ++j) {
      const double y = (j + 0.5) * dy;
      for (const auto& p : pts) {
        if (p.bike_pct <= x && p.car_pct <= y) {
          ++hits;
          break;
        }
      }
    }
  }
  return hits * dx * dy;
}

}  // namespace

TEST_CASE("hypervolume of simple frontiers") {
  CHECK(hypervolume({pt(-40.0, 10.0)}) == doctest::Approx(1600.0));
  CHECK(hypervolume({pt(-40.0, 60.0)}) == 0.0);
  CHECK(hypervolume({pt(5.0, 10.0)}) == 0.0);
  CHECK(hypervolume({}) == 0.0);
  // Two steps: 40 x 40 plus 10 x 20.
  CHECK(hypervolume({pt(-40.0, 10.0), pt(-50.0, 30.0)}) == doctest::Approx(1800.0));
  // Negative car change counts from the point itself.
  CHECK(hypervolume({pt(-10.0, -10.0)}) == doctest::Approx(600.0));
}

TEST_CASE("hypervolume matches a grid estimate") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> bike(-50.0, 5.0), car(0.0, 60.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<ParetoPoint> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(pt(bike(rng), car(rng)));
    const double exact = hypervolume(pareto_filter(pts));
    CHECK(exact == doctest::Approx(grid_area(pts, -50.0)).epsilon(0.01));
  }
}

TEST_CASE("pareto filter keeps exactly the nondominated points") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<ParetoPoint> pts;
    const int n = 1 + static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      // Coarse grid so that ties and duplicates occur.
      pts.push_back(pt(-static_cast<double>(rng() % 8), static_cast<double>(rng() % 8)));
    }
    const auto front = pareto_filter(pts);
    std::vector<std::pair<double, double>> expect;
    for (const auto& p : pts) {
      if (!dominated(p, pts)) expect.emplace_back(p.car_pct, p.bike_pct);
    }
    std::sort(expect.begin(), expect.end());
    expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
    std::vector<std::pair<double, double>> got;
    for (const auto& p : front) got.emplace_back(p.car_pct, p.bike_pct);
    CHECK(got == expect);
  }
}

TEST_CASE("nearest subset") {
  const std::vector<ParetoPoint> lp{pt(-10, 1), pt(-20, 5), pt(-30, 20)};
  const std::vector<ParetoPoint> oracle{pt(-11, 1), pt(-12, 1.5), pt(-31, 19)};
  const auto sub = nearest_subset(lp, oracle);
  REQUIRE(sub.size() == 2);
  CHECK(sub[0].bike_pct == -10);
  CHECK(sub[1].bike_pct == -30);
  // Equidistant: lower car change wins.
  const auto tie = nearest_subset({pt(-10, 0), pt(-10, 2)}, {pt(-10, 1)});
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].car_pct == 0);
  CHECK(hi_gap_pct(95.0, 100.0) == doctest::Approx(-5.0));
}

TEST_CASE("percent change") {
  const auto [b, c] = to_percent({6.0, 11.0}, {8.0, 10.0});
  CHECK(b == doctest::Approx(-25.0));
  CHECK(c == doctest::Approx(10.0));
  CHECK_THROWS(to_percent({1.0, 1.0}, {0.0, 1.0}));
}

TEST_CASE("evaluation against hand-computed paths") {
  // Square 0-1-2-3 with diagonal 0-2; flat, 1 km sides, 0.5 km diagonal.
  const StreetGraph g =
      testing::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2, 0.5}});
  const LaneDigraph dg(g);
  OdMatrix od = testing::demand(g, {{0, 2}, {1, 3}});
  od.pairs[1].weight_car = 3.0;
  const double tc = 1.0 / 30.0, tb = 1.0 / 21.6;

  NetworkDesign all_car = all_car_design(dg);
  const DesignTimes t0 = evaluate_times(all_car, dg, od);
  // 0 -> 2 uses the diagonal, 1 -> 3 goes around two sides.
  CHECK(t0.car == doctest::Approx(0.5 * tc + 3.0 * 2.0 * tc));
  CHECK(t0.bike == doctest::Approx(2 * 0.5 * tb + 2 * 2.0 * tb));

  NetworkDesign d = all_car;
  d.streets[4] = {0, 0, 2};
  const DesignTimes t1 = evaluate_times(d, dg, od);
  CHECK(t1.car == doctest::Approx(2.0 * tc + 3.0 * 2.0 * tc));
  CHECK(t1.bike == doctest::Approx(0.5 * tb + 2 * 2.0 * tb));
  CHECK(design_objective(t1, 2.0) == doctest::Approx(t1.bike + 2.0 * t1.car));

  const ParetoPoint p = evaluate_design(d, dg, od, t0);
  CHECK(p.bike_pct == doctest::Approx(100.0 * (t1.bike - t0.bike) / t0.bike));
  CHECK(p.car_pct == doctest::Approx(100.0 * (t1.car - t0.car) / t0.car));
  CHECK(p.num_bike_streets == 1);
}

TEST_CASE("flow scales totals and auxiliary pairs are free") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const LaneDigraph dg(g);
  OdMatrix od = testing::demand(g, {{0, 1}});
  const DesignTimes one = evaluate_times(all_car_design(dg), dg, od);
  od.pairs[0].flow = 3;
  const DesignTimes three = evaluate_times(all_car_design(dg), dg, od);
  CHECK(three.car == doctest::Approx(3 * one.car));
  CHECK(one.car == doctest::Approx(1.0 / 30.0));
}

TEST_CASE("unreachable demand is an error") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const LaneDigraph dg(g);
  NetworkDesign d = all_car_design(dg);
  d.streets[0] = {1, 0, 0};
  d.streets[1] = {1, 0, 0};
  d.streets[2] = {0, 0, 0};
  CHECK_THROWS_AS(evaluate_times(d, dg, testing::demand(g, {{1, 0}})), InvalidInstance);
}

TEST_CASE("frontier CSV round trip") {
  std::vector<ParetoPoint> f{pt(-12.5, 0.25), pt(-30.125, 4.0)};
  f[0].provenance = {"optimize", 2.0, 10, 3, std::nullopt};
  f[0].design_file = "designs/point_0000.json";
  f[0].bike_time_h = 1.0 / 3.0;
  const std::string csv = frontier_to_csv(f);
  CHECK(csv.rfind(frontier_csv_header(), 0) == 0);
  const auto back = frontier_from_csv(csv);
  REQUIRE(back.size() == 2);
  CHECK(back[0].bike_time_h == f[0].bike_time_h);
  CHECK(back[0].provenance.gamma == 2.0);
  CHECK(back[0].design_file == f[0].design_file);
  CHECK(frontier_to_csv(back) == csv);
}
