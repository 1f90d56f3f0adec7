#include <algorithm>
#include <random>

#include "doctest.h"
#include "lanealloc/design.hpp"
#include "lanealloc/evaluation.hpp"
#include "support.hpp"

using namespace lanealloc;

namespace {

NetworkDesign design_of(std::vector<StreetAllocation> streets) {
  NetworkDesign d;
  d.streets = std::move(streets);
  d.provenance.algorithm = "test";
  return d;
}

}  // namespace

TEST_CASE("one street, every allocation of two units") {
  // 1 km at +2 %, 30 km/h.
  const StreetGraph g = testing::make_graph(2, {{0, 1, 1.0, 2.0}});
  const LaneDigraph dg(g);
  const double car = 1.0 / 30.0;
  const double up = 1.0 / 18.72;   // 21.6 - 1.44 * 2
  const double down = 1.0 / 23.32; // 21.6 + 0.86 * 2
  struct Case {
    StreetAllocation a;
    std::optional<double> car_f, car_b, bike_f, bike_b;
  };
  const std::vector<Case> cases{
      {{2, 0, 0}, car, std::nullopt, 2 * up, 2 * down},
      {{1, 1, 0}, car, car, 2 * up, 2 * down},
      {{0, 2, 0}, std::nullopt, car, 2 * up, 2 * down},
      {{1, 0, 1}, car, std::nullopt, up, down},
      {{0, 1, 1}, std::nullopt, car, up, down},
      {{0, 0, 2}, std::nullopt, std::nullopt, up, down},
  };
  for (const Case& c : cases) {
    CAPTURE(c.a.car_fwd);
    CAPTURE(c.a.car_bwd);
    CAPTURE(c.a.bike);
    const NetworkDesign d = design_of({c.a});
    const auto cw = design_car_weights(d, dg);
    const auto bw = design_bike_weights(d, dg);
    CHECK(cw[0].has_value() == c.car_f.has_value());
    CHECK(cw[1].has_value() == c.car_b.has_value());
    if (c.car_f) CHECK(*cw[0] == doctest::Approx(*c.car_f));
    if (c.car_b) CHECK(*cw[1] == doctest::Approx(*c.car_b));
    REQUIRE(bw[0]);
    REQUIRE(bw[1]);
    CHECK(*bw[0] == doctest::Approx(*c.bike_f));
    CHECK(*bw[1] == doctest::Approx(*c.bike_b));
    // Only the two-way allocation keeps both endpoints reachable by car.
    CHECK(design_violations(d, dg).empty() == (c.a == StreetAllocation{1, 1, 0}));
  }
}

TEST_CASE("a street without lanes carries no traffic") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}, {0, 2, 0.1}});
  const LaneDigraph dg(g);
  const NetworkDesign d = design_of({{1, 1, 0}, {1, 1, 0}, {1, 1, 0}, {0, 0, 0}});
  CHECK(design_violations(d, dg).empty());
  CHECK_FALSE(design_bike_weights(d, dg)[6].has_value());
  CHECK_FALSE(design_car_weights(d, dg)[7].has_value());
}

TEST_CASE("design violations") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const LaneDigraph dg(g);
  CHECK(design_violations(design_of({{1, 0, 0}, {1, 0, 0}, {1, 0, 0}}), dg).empty());
  CHECK_FALSE(design_violations(design_of({{2, 1, 0}, {1, 0, 0}, {1, 0, 0}}), dg).empty());
  CHECK_FALSE(design_violations(design_of({{-1, 0, 0}, {1, 0, 0}, {1, 0, 0}}), dg).empty());
  CHECK_FALSE(design_violations(design_of({{1, 0, 0}, {0, 1, 0}, {1, 0, 0}}), dg).empty());
  CHECK_FALSE(design_violations(design_of({{1, 0, 0}, {1, 0, 0}}), dg).empty());
  CHECK_THROWS_AS(validate_design(design_of({{0, 0, 2}, {0, 0, 2}, {1, 1, 0}}), dg),
                  InvalidInstance);
}

TEST_CASE("bridges need two car units") {
  SUBCASE("two-unit bridge") {
    const StreetGraph g = testing::barbell(2);
    CHECK(car_orientable(g, {1, 1, 1, 1, 1, 1, 2}));
    CHECK_FALSE(car_orientable(g, {1, 1, 1, 1, 1, 1, 1}));
    CHECK_FALSE(car_orientable(g, {1, 1, 1, 1, 1, 1, 0}));
    // A triangle with one street removed becomes a path of bridges.
    CHECK_FALSE(car_orientable(g, {0, 1, 1, 1, 1, 1, 2}));
    CHECK(car_orientable(g, {0, 2, 2, 1, 1, 1, 2}));
  }
  SUBCASE("single-lane bridge cannot be materialized") {
    const StreetGraph g = testing::barbell(1);
    const LaneDigraph dg(g);
    CHECK_THROWS_AS(materialize(dg, std::vector<int>(7, 0), std::vector<double>(14, 0.0)),
                    InvalidInstance);
  }
}

// Reference: try every orientation of single-unit streets.
TEST_CASE("orientability matches brute-force orientation search") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 3);
    std::vector<testing::Edge> edges;
    for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
    for (int c = 0; c < 2; ++c) {
      const int u = static_cast<int>(rng() % n), v = static_cast<int>(rng() % n);
      if (u != v) edges.push_back({u, v});
    }
    const StreetGraph g = testing::make_graph(n, edges);
    const LaneDigraph dg(g);
    std::vector<int> units(edges.size());
    for (int& u : units) u = static_cast<int>(rng() % 3);
    std::vector<int> singles;
    for (std::size_t s = 0; s < units.size(); ++s)
      if (units[s] == 1) singles.push_back(static_cast<int>(s));
    bool found = false;
    for (unsigned mask = 0; !found && mask < (1u << singles.size()); ++mask) {
      std::vector<bool> active(dg.num_arcs(), false);
      for (std::size_t s = 0; s < units.size(); ++s) {
        if (units[s] >= 2) active[2 * s] = active[2 * s + 1] = true;
      }
      for (std::size_t i = 0; i < singles.size(); ++i) {
        active[2 * singles[i] + ((mask >> i) & 1u)] = true;
      }
      found = is_strongly_connected(dg, active);
    }
    CAPTURE(trial);
    CHECK(car_orientable(g, units) == found);
  }
}

TEST_CASE("materialize follows car preferences and keeps connectivity") {
  const StreetGraph g = testing::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
  const LaneDigraph dg(g);
  std::vector<double> pref(10, 0.0);
  pref[1] = 0.9;  // street 0 prefers backward
  const NetworkDesign d = materialize(dg, {0, 0, 0, 0, 2}, pref);
  CHECK(d.streets[4] == StreetAllocation{0, 0, 2});
  for (int s = 0; s < 4; ++s) {
    CHECK(d.streets[s].car_fwd >= 1);
    CHECK(d.streets[s].car_bwd >= 1);
  }
  CHECK(d.streets[0] == StreetAllocation{1, 1, 0});
  CHECK(design_violations(d, dg).empty());

  // One-unit streets: a ring must end up oriented one way round.
  const StreetGraph ring =
      testing::make_graph(3, {{0, 1, 1, 0, 1}, {1, 2, 1, 0, 1}, {2, 0, 1, 0, 1}});
  const LaneDigraph rdg(ring);
  std::vector<double> p(6, 0.0);
  p[1] = 1.0;
  const NetworkDesign r = materialize(rdg, {0, 0, 0}, p);
  CHECK(design_violations(r, rdg).empty());
  CHECK(r.streets[0] == StreetAllocation{0, 1, 0});
}

TEST_CASE("all-car design") {
  const auto inst = testing::synthetic(15, 2);
  const LaneDigraph dg(inst.graph);
  const NetworkDesign d = all_car_design(dg);
  CHECK(d.provenance.algorithm == "all_car");
  CHECK(d.num_bike_streets() == 0);
  for (std::size_t s = 0; s < d.streets.size(); ++s) {
    CHECK(d.streets[s] == StreetAllocation{1, 1, 0});
  }
  CHECK(design_violations(d, dg).empty());
}

TEST_CASE("design JSON round trip") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  NetworkDesign d = design_of({{1, 0, 1}, {1, 1, 0}, {0, 1, 1}});
  d.provenance = {"top_down", 0.0, 0, 3, 10.0};
  const std::string text = design_to_json(d, g);
  const NetworkDesign back = design_from_json(text, g);
  CHECK(back.streets == d.streets);
  CHECK(back.provenance.iteration == 3);
  CHECK(back.provenance.car_speed_override_kmh == 10.0);
  CHECK(design_to_json(back, g) == text);
  CHECK_THROWS_AS(design_from_json(R"({"provenance":{"algorithm":"x","gamma":1,"k":1,"iteration":0},
                                      "streets":[{"edge_id":42,"car_fwd":1,"car_bwd":1,"bike":0}]})",
                                   g),
                  InvalidInstance);
}

TEST_CASE("fixed bike lanes") {
  const StreetGraph g = testing::make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const auto lanes = fixed_bike_lanes({{2, LaneMode::kBike, 1}, {3, LaneMode::kCar, 2}}, g);
  CHECK(lanes == std::vector<int>{0, 1, 0});
}
