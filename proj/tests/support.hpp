#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "lanealloc/generator.hpp"
#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"

namespace testing {

using namespace lanealloc;

struct Edge {
  int u;
  int v;
  double length_km = 1.0;
  double gradient_pct = 0.0;
  int capacity = 2;
};

// Nodes get ids 1..n on a unit circle; streets get ids 1..m.
inline StreetGraph make_graph(int n, const std::vector<Edge>& edges) {
  std::vector<Node> nodes;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    nodes.push_back(Node{i + 1, std::cos(a), std::sin(a), 0.0});
  }
  std::vector<Street> streets;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    streets.push_back(Street{static_cast<std::int64_t>(i + 1), static_cast<NodeIndex>(e.u),
                             static_cast<NodeIndex>(e.v), e.length_km, e.gradient_pct, 30.0,
                             e.capacity});
  }
  return StreetGraph(std::move(nodes), std::move(streets));
}

// Two triangles joined by street 7 (2 -- 3).
inline StreetGraph barbell(int bridge_capacity = 2) {
  return make_graph(6, {{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 5}, {5, 3},
                        {2, 3, 1.0, 0.0, bridge_capacity}});
}

inline OdMatrix demand(const StreetGraph& g, std::vector<std::pair<int, int>> pairs,
                       std::uint64_t aux_seed = 1) {
  OdMatrix od;
  for (auto [s, t] : pairs) {
    od.pairs.push_back(OdPair{static_cast<NodeIndex>(s), static_cast<NodeIndex>(t), 1.0, 1.0, 1,
                              false});
  }
  return extend_with_aux(od, g, aux_seed);
}

struct Synthetic {
  StreetGraph graph;
  OdMatrix od;
};

inline Synthetic synthetic(int n, std::uint64_t seed, double psi = 0.1) {
  GenParams p;
  p.n = n;
  p.seed = seed;
  StreetGraph g = generate_synthetic(p);
  OdMatrix od = extend_with_aux(sample_od(g, psi, substream_seed(seed, "od")), g,
                                substream_seed(seed, "aux"));
  return {std::move(g), std::move(od)};
}

// Floyd-Warshall over present arcs; reference for Dijkstra.
inline std::vector<std::vector<double>> all_pairs(const LaneDigraph& dg,
                                                  const std::vector<std::optional<double>>& w) {
  const std::size_t n = dg.num_nodes();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, INFINITY));
  for (std::size_t v = 0; v < n; ++v) d[v][v] = 0.0;
  for (const Arc& a : dg.arcs()) {
    if (w[a.id]) d[a.tail][a.head] = std::min(d[a.tail][a.head], *w[a.id]);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace testing
