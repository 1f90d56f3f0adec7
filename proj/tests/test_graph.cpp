#include <algorithm>
#include <set>

#include "doctest.h"
#include "lanealloc/generator.hpp"
#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"
#include "lanealloc/paths.hpp"
#include "support.hpp"

using namespace lanealloc;
using testing::make_graph;

TEST_CASE("bike speed follows the gradient") {
  CHECK(bike_speed_kmh(0.0) == doctest::Approx(21.6).epsilon(1e-15));
  CHECK(bike_speed_kmh(-3.0) == doctest::Approx(24.18).epsilon(1e-14));
  CHECK(bike_speed_kmh(5.0) == doctest::Approx(21.6 - 7.2).epsilon(1e-14));
  // Steep climbs are floored at walking-ish pace.
  CHECK(bike_speed_kmh(20.0) == 1.0);
  CHECK(bike_speed_kmh(14.3) == doctest::Approx(1.008).epsilon(1e-12));
}

TEST_CASE("arc times") {
  const StreetGraph g = make_graph(2, {{0, 1, 2.0, 4.0}});
  const LaneDigraph dg(g);
  REQUIRE(dg.num_arcs() == 2);
  const Arc& up = dg.arc(0);
  const Arc& down = dg.arc(1);
  CHECK(up.tail == 0);
  CHECK(down.tail == 1);
  CHECK(down.gradient_pct == -4.0);
  CHECK(up.t_car == doctest::Approx(2.0 / 30.0));
  CHECK(up.t_bike == doctest::Approx(2.0 / (21.6 - 1.44 * 4.0)));
  CHECK(down.t_bike == doctest::Approx(2.0 / (21.6 + 0.86 * 4.0)));
  CHECK(up.t_shared == 2.0 * up.t_bike);
  CHECK(LaneDigraph::reverse_of(0) == 1);
  CHECK(LaneDigraph::reverse_of(7) == 6);
}

TEST_CASE("adjacency spans are sorted") {
  const StreetGraph g = make_graph(3, {{0, 1}, {1, 2}, {2, 0}, {0, 1}});
  const LaneDigraph dg(g);
  for (NodeIndex v = 0; v < 3; ++v) {
    auto out = dg.out_arcs(v);
    CHECK(std::is_sorted(out.begin(), out.end()));
    for (ArcId a : out) CHECK(dg.arc(a).tail == v);
    for (ArcId a : dg.in_arcs(v)) CHECK(dg.arc(a).head == v);
  }
  CHECK(dg.out_arcs(0).size() == 3);
}

TEST_CASE("graph validation") {
  std::vector<Node> nodes{{1, 0, 0, 0}, {2, 1, 0, 0}};
  CHECK_THROWS_AS(StreetGraph(nodes, {Street{1, 0, 0, 1.0, 0.0, 30.0, 2}}), InvalidInstance);
  CHECK_THROWS_AS(StreetGraph(nodes, {Street{1, 0, 1, -1.0, 0.0, 30.0, 2}}), InvalidInstance);
  CHECK_THROWS_AS(StreetGraph(nodes, {Street{1, 0, 1, 1.0, 0.0, 30.0, 0}}), InvalidInstance);
  CHECK_THROWS_AS(StreetGraph(nodes, {Street{1, 0, 5, 1.0, 0.0, 30.0, 2}}), InvalidInstance);
  CHECK_THROWS_AS(StreetGraph({{1, 0, 0, 0}, {1, 1, 0, 0}}, {}), InvalidInstance);
  CHECK_NOTHROW(StreetGraph(nodes, {Street{1, 0, 1, 1.0, 0.0, 30.0, 2}}));
}

TEST_CASE("graph JSON round trip is byte-stable") {
  const auto inst = testing::synthetic(15, 3);
  const std::string text = street_graph_to_json(inst.graph);
  const StreetGraph back = street_graph_from_json(text);
  CHECK(street_graph_to_json(back) == text);
  REQUIRE(back.num_streets() == inst.graph.num_streets());
  for (std::size_t i = 0; i < back.num_streets(); ++i) {
    CHECK(back.street(i).length_km == inst.graph.street(i).length_km);
    CHECK(back.street(i).capacity == inst.graph.street(i).capacity);
  }
  CHECK_THROWS_AS(street_graph_from_json("{\"nodes\": []"), InvalidInstance);
}

TEST_CASE("shortest paths agree with Floyd-Warshall") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto inst = testing::synthetic(18, seed);
    const LaneDigraph dg(inst.graph);
    for (const EdgeWeighting& w : {car_weights(dg), bike_weights(dg), shared_weights(dg)}) {
      const auto ref = testing::all_pairs(dg, w);
      for (NodeIndex s = 0; s < 18; s += 5) {
        const auto dist = distances_from(dg, w, s);
        for (NodeIndex t = 0; t < 18; ++t) {
          CHECK(dist[t] == doctest::Approx(ref[s][t]).epsilon(1e-12));
          if (s == t) continue;
          const auto p = shortest_path(dg, w, s, t);
          REQUIRE(p);
          double sum = 0.0;
          NodeIndex at = s;
          for (ArcId a : p->arcs) {
            CHECK(dg.arc(a).tail == at);
            at = dg.arc(a).head;
            sum += *w[a];
          }
          CHECK(at == t);
          CHECK(sum == doctest::Approx(ref[s][t]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("strong connectivity of arc subsets") {
  const StreetGraph g = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  const LaneDigraph dg(g);
  CHECK(is_strongly_connected(dg, std::vector<bool>(6, true)));
  // One-way ring 0 -> 1 -> 2 -> 0.
  CHECK(is_strongly_connected(dg, {true, false, true, false, true, false}));
  CHECK_FALSE(is_strongly_connected(dg, {true, false, false, true, true, false}));
}

TEST_CASE("eta neighbourhoods") {
  const auto inst = testing::synthetic(25, 5);
  const LaneDigraph dg(inst.graph);
  const NearestNodes near(inst.graph);
  for (NodeIndex v = 0; v < 25; ++v) CHECK(near.ranked(v).front() == v);
  const auto small = eta_subgraph(dg, 0, 17, 3);
  const auto large = eta_subgraph(dg, 0, 17, 25);
  CHECK(large.size() == dg.num_arcs());
  CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
  std::set<NodeIndex> touched;
  for (ArcId a : small) {
    touched.insert(dg.arc(a).tail);
    touched.insert(dg.arc(a).head);
  }
  CHECK(touched.count(0));
  CHECK(touched.count(17));
  // Induced: both arcs of a street are in or out together.
  for (ArcId a : small) {
    CHECK(std::binary_search(small.begin(), small.end(), LaneDigraph::reverse_of(a)));
  }
}

TEST_CASE("generator is deterministic and well formed") {
  GenParams p;
  p.n = 30;
  p.seed = 11;
  const StreetGraph a = generate_synthetic(p);
  const StreetGraph b = generate_synthetic(p);
  CHECK(street_graph_to_json(a) == street_graph_to_json(b));
  p.seed = 12;
  CHECK(street_graph_to_json(generate_synthetic(p)) != street_graph_to_json(a));

  CHECK(a.num_nodes() == 30);
  // Each node draws 2 to 4 neighbours.
  CHECK(a.num_streets() >= 60);
  CHECK(a.num_streets() <= 120);
  const LaneDigraph dg(a);
  CHECK(is_strongly_connected(dg, std::vector<bool>(dg.num_arcs(), true)));
  for (const Street& s : a.streets()) {
    CHECK(s.capacity == 2);
    CHECK(s.speed_limit_kmh == 30.0);
    CHECK(std::abs(s.gradient_pct) <= 10.0);
    const Node& u = a.node(s.u);
    const Node& v = a.node(s.v);
    CHECK(s.length_km == doctest::Approx(std::hypot(u.x_km - v.x_km, u.y_km - v.y_km)));
  }
}

TEST_CASE("neighbour probabilities are inverse square") {
  const StreetGraph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  const auto p = neighbor_probabilities(g.nodes(), 0);
  CHECK(p[0] == 0.0);
  double total = 0.0;
  for (double x : p) total += x;
  CHECK(total == doctest::Approx(1.0));
  // Nodes 1 and 3 sit at distance sqrt(2), node 2 at distance 2.
  CHECK(p[1] == doctest::Approx(p[3]));
  CHECK(p[1] / p[2] == doctest::Approx(4.0 / 2.0));
}

TEST_CASE("OD sampling and the auxiliary chain") {
  const auto inst = testing::synthetic(20, 4, 0.1);
  const OdMatrix& od = inst.od;
  CHECK(od.num_demand() == 40);
  CHECK(od.num_aux() == 20);
  std::set<std::pair<NodeIndex, NodeIndex>> seen;
  std::vector<int> out_deg(20, 0), in_deg(20, 0);
  for (const OdPair& p : od.pairs) {
    CHECK(p.s != p.t);
    if (p.is_aux) {
      ++out_deg[p.s];
      ++in_deg[p.t];
    } else {
      CHECK(seen.insert({p.s, p.t}).second);
    }
  }
  for (int v = 0; v < 20; ++v) {
    CHECK(out_deg[v] == 1);
    CHECK(in_deg[v] == 1);
  }
  // Following the chain from node 0 visits every node once.
  std::vector<NodeIndex> next(20);
  for (const OdPair& p : od.pairs)
    if (p.is_aux) next[p.s] = p.t;
  std::set<NodeIndex> visited;
  for (NodeIndex v = 0; visited.insert(v).second; v = next[v]) {
  }
  CHECK(visited.size() == 20);

  CHECK_NOTHROW(validate_od(od, 20));
  CHECK(all_pairs_od(inst.graph).pairs.size() == 380);
  CHECK_THROWS(sample_od(inst.graph, 0.0, 1));
  CHECK_THROWS(sample_od(inst.graph, 1.5, 1));
}

TEST_CASE("OD validation") {
  const StreetGraph g = make_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  OdMatrix od = testing::demand(g, {{0, 2}});
  CHECK_NOTHROW(validate_od(od, 3));
  OdMatrix dup = od;
  dup.pairs.push_back(dup.pairs.front());
  CHECK_THROWS_AS(validate_od(dup, 3), InvalidInstance);
  OdMatrix self = od;
  self.pairs.front().t = self.pairs.front().s;
  CHECK_THROWS_AS(validate_od(self, 3), InvalidInstance);
  OdMatrix broken = od;
  broken.pairs.pop_back();
  CHECK_THROWS_AS(validate_od(broken, 3), InvalidInstance);
}

TEST_CASE("OD CSV round trip") {
  const auto inst = testing::synthetic(12, 9, 0.2);
  const std::string csv = od_to_csv(inst.od, inst.graph);
  CHECK(csv.rfind("s,t,weight_bike,weight_car,flow,is_aux\n", 0) == 0);
  const OdMatrix back = od_from_csv(csv, inst.graph);
  CHECK(od_to_csv(back, inst.graph) == csv);
  CHECK_THROWS_AS(od_from_csv("s,t,weight_bike,weight_car,flow,is_aux\n999,1,1,1,1,0\n",
                              inst.graph),
                  InvalidInstance);
}
