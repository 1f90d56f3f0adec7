#pragma once

#include <optional>
#include <vector>

#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

/// Per-arc cost in hours. An absent entry means the arc cannot be used.
using EdgeWeighting = std::vector<std::optional<double>>;

EdgeWeighting car_weights(const LaneDigraph& dg);
EdgeWeighting bike_weights(const LaneDigraph& dg);
EdgeWeighting shared_weights(const LaneDigraph& dg);

struct Path {
  std::vector<ArcId> arcs;
  double cost = 0.0;
};

/// Single-source distances over present arcs; unreachable nodes get +inf.
std::vector<double> distances_from(const LaneDigraph& dg, const EdgeWeighting& w,
                                   NodeIndex source);
/// Distances from every node to `target`.
std::vector<double> distances_to(const LaneDigraph& dg, const EdgeWeighting& w,
                                 NodeIndex target);

/// Minimum-cost s-t path. Among optimal paths the one with the
/// lexicographically smallest arc-id sequence is returned. nullopt when t is
/// unreachable.
std::optional<Path> shortest_path(const LaneDigraph& dg, const EdgeWeighting& w,
                                  NodeIndex s, NodeIndex t);

/// Same as shortest_path but reuses distances to t computed by distances_to.
std::optional<Path> shortest_path_to(const LaneDigraph& dg, const EdgeWeighting& w,
                                     NodeIndex s, NodeIndex t,
                                     const std::vector<double>& dist_to_t);

bool is_strongly_connected(const LaneDigraph& dg, const std::vector<bool>& active_arcs);

struct Betweenness {
  std::vector<int> arc_counts;
  // Indices into od.pairs of demand pairs without a path.
  std::vector<std::size_t> unreachable;
};

/// Counts, per arc, the demand pairs whose deterministic shortest path uses it.
/// Pairs with zero demand weight in both modes and auxiliary pairs are skipped.
Betweenness od_betweenness(const LaneDigraph& dg, const EdgeWeighting& w,
                           const OdMatrix& od);

/// Ranking of nodes by Euclidean distance for every node (ties by node id).
/// Row v starts with v itself.
class NearestNodes {
 public:
  explicit NearestNodes(const StreetGraph& g);
  std::span<const NodeIndex> ranked(NodeIndex v) const;

 private:
  std::size_t n_;
  std::vector<NodeIndex> table_;
};

/// Arc set of the induced subgraph on the union of the eta nearest nodes of
/// every node on the bike shortest path from s to t. Sorted by arc id.
std::vector<ArcId> eta_subgraph(const LaneDigraph& dg, NodeIndex s, NodeIndex t, int eta);
std::vector<ArcId> eta_subgraph(const LaneDigraph& dg, const NearestNodes& near,
                                NodeIndex s, NodeIndex t, int eta);

}  // namespace lanealloc
