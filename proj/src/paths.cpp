#include "lanealloc/paths.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

namespace lanealloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack when deciding whether an arc lies on an optimal path.
constexpr double kTieTolerance = 1e-12;

using HeapEntry = std::pair<double, NodeIndex>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

template <bool Forward>
std::vector<double> dijkstra(const LaneDigraph& dg, const EdgeWeighting& w, NodeIndex root) {
  if (w.size() != dg.num_arcs()) throw std::invalid_argument("weighting size mismatch");
  std::vector<double> dist(dg.num_nodes(), kInf);
  dist[root] = 0.0;
  MinHeap heap;
  heap.emplace(0.0, root);
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    auto arcs = Forward ? dg.out_arcs(v) : dg.in_arcs(v);
    for (ArcId a : arcs) {
      if (!w[a]) continue;
      const NodeIndex x = Forward ? dg.arc(a).head : dg.arc(a).tail;
      const double nd = d + *w[a];
      if (nd < dist[x]) {
        dist[x] = nd;
        heap.emplace(nd, x);
      }
    }
  }
  return dist;
}

bool on_optimal_path(double via, double best) {
  return via <= best + kTieTolerance * std::max(1.0, std::abs(best));
}

}  // namespace

EdgeWeighting car_weights(const LaneDigraph& dg) {
  EdgeWeighting w(dg.num_arcs());
  for (const Arc& a : dg.arcs()) w[a.id] = a.t_car;
  return w;
}

EdgeWeighting bike_weights(const LaneDigraph& dg) {
  EdgeWeighting w(dg.num_arcs());
  for (const Arc& a : dg.arcs()) w[a.id] = a.t_bike;
  return w;
}

EdgeWeighting shared_weights(const LaneDigraph& dg) {
  EdgeWeighting w(dg.num_arcs());
  for (const Arc& a : dg.arcs()) w[a.id] = a.t_shared;
  return w;
}

std::vector<double> distances_from(const LaneDigraph& dg, const EdgeWeighting& w,
                                   NodeIndex source) {
  return dijkstra<true>(dg, w, source);
}

std::vector<double> distances_to(const LaneDigraph& dg, const EdgeWeighting& w,
                                 NodeIndex target) {
  return dijkstra<false>(dg, w, target);
}

std::optional<Path> shortest_path_to(const LaneDigraph& dg, const EdgeWeighting& w,
                                     NodeIndex s, NodeIndex t,
                                     const std::vector<double>& dist_to_t) {
  if (!std::isfinite(dist_to_t[s])) return std::nullopt;
  Path path;
  if (s == t) return path;
  std::vector<char> visited(dg.num_nodes(), 0);
  visited[s] = 1;
  NodeIndex v = s;
  while (v != t) {
    ArcId chosen = -1;
    // out_arcs is sorted, so the first admissible arc is the smallest id.
    for (ArcId a : dg.out_arcs(v)) {
      if (!w[a]) continue;
      const NodeIndex x = dg.arc(a).head;
      if (visited[x] || !std::isfinite(dist_to_t[x])) continue;
      if (on_optimal_path(*w[a] + dist_to_t[x], dist_to_t[v])) {
        chosen = a;
        break;
      }
    }
    if (chosen < 0) {
      // Only reachable with zero-cost cycles; fall back to the exact minimum.
      double best = kInf;
      for (ArcId a : dg.out_arcs(v)) {
        if (!w[a]) continue;
        const NodeIndex x = dg.arc(a).head;
        if (visited[x]) continue;
        const double via = *w[a] + dist_to_t[x];
        if (via < best) {
          best = via;
          chosen = a;
        }
      }
      if (chosen < 0) return std::nullopt;
    }
    path.arcs.push_back(chosen);
    path.cost += *w[chosen];
    v = dg.arc(chosen).head;
    visited[v] = 1;
  }
  return path;
}

std::optional<Path> shortest_path(const LaneDigraph& dg, const EdgeWeighting& w,
                                  NodeIndex s, NodeIndex t) {
  return shortest_path_to(dg, w, s, t, distances_to(dg, w, t));
}

bool is_strongly_connected(const LaneDigraph& dg, const std::vector<bool>& active_arcs) {
  const std::size_t n = dg.num_nodes();
  if (n <= 1) return true;
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<NodeIndex> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      NodeIndex v = stack.back();
      stack.pop_back();
      for (ArcId a : forward ? dg.out_arcs(v) : dg.in_arcs(v)) {
        if (!active_arcs[a]) continue;
        NodeIndex x = forward ? dg.arc(a).head : dg.arc(a).tail;
        if (!seen[x]) {
          seen[x] = 1;
          ++count;
          stack.push_back(x);
        }
      }
    }
    return count == n;
  };
  return reach_all(true) && reach_all(false);
}

Betweenness od_betweenness(const LaneDigraph& dg, const EdgeWeighting& w,
                           const OdMatrix& od) {
  Betweenness result;
  result.arc_counts.assign(dg.num_arcs(), 0);
  std::map<NodeIndex, std::vector<std::size_t>> by_target;
  for (std::size_t i = 0; i < od.pairs.size(); ++i) {
    const OdPair& p = od.pairs[i];
    if (p.is_aux || (p.weight_bike <= 0.0 && p.weight_car <= 0.0)) continue;
    by_target[p.t].push_back(i);
  }
  std::vector<std::size_t> unreachable;
  for (const auto& [target, idx] : by_target) {
    const auto dist = distances_to(dg, w, target);
    for (std::size_t i : idx) {
      auto path = shortest_path_to(dg, w, od.pairs[i].s, target, dist);
      if (!path) {
        unreachable.push_back(i);
        continue;
      }
      for (ArcId a : path->arcs) ++result.arc_counts[a];
    }
  }
  std::sort(unreachable.begin(), unreachable.end());
  result.unreachable = std::move(unreachable);
  return result;
}

NearestNodes::NearestNodes(const StreetGraph& g) : n_(g.num_nodes()), table_(n_ * n_) {
  std::vector<NodeIndex> order(n_);
  for (std::size_t v = 0; v < n_; ++v) {
    const Node& origin = g.node(static_cast<NodeIndex>(v));
    for (std::size_t i = 0; i < n_; ++i) order[i] = static_cast<NodeIndex>(i);
    auto dist2 = [&](NodeIndex i) {
      const double dx = g.node(i).x_km - origin.x_km;
      const double dy = g.node(i).y_km - origin.y_km;
      return dx * dx + dy * dy;
    };
    std::sort(order.begin(), order.end(), [&](NodeIndex a, NodeIndex b) {
      if (a == static_cast<NodeIndex>(v) || b == static_cast<NodeIndex>(v)) {
        return a == static_cast<NodeIndex>(v) && b != a;
      }
      const double da = dist2(a), db = dist2(b);
      if (da != db) return da < db;
      return g.node(a).id < g.node(b).id;
    });
    std::copy(order.begin(), order.end(), table_.begin() + static_cast<std::ptrdiff_t>(v * n_));
  }
}

std::span<const NodeIndex> NearestNodes::ranked(NodeIndex v) const {
  return {table_.data() + static_cast<std::size_t>(v) * n_, n_};
}

std::vector<ArcId> eta_subgraph(const LaneDigraph& dg, NodeIndex s, NodeIndex t, int eta) {
  return eta_subgraph(dg, NearestNodes(dg.streets()), s, t, eta);
}

std::vector<ArcId> eta_subgraph(const LaneDigraph& dg, const NearestNodes& near,
                                NodeIndex s, NodeIndex t, int eta) {
  if (eta < 1) throw std::invalid_argument("eta must be >= 1");
  std::vector<ArcId> arcs;
  const std::size_t n = dg.num_nodes();
  if (static_cast<std::size_t>(eta) >= n) {
    arcs.resize(dg.num_arcs());
    for (std::size_t a = 0; a < arcs.size(); ++a) arcs[a] = static_cast<ArcId>(a);
    return arcs;
  }
  std::vector<char> in_set(n, 0);
  in_set[s] = in_set[t] = 1;
  std::vector<NodeIndex> path_nodes{s};
  if (auto path = shortest_path(dg, bike_weights(dg), s, t)) {
    for (ArcId a : path->arcs) path_nodes.push_back(dg.arc(a).head);
  }
  for (NodeIndex v : path_nodes) {
    auto ranked = near.ranked(v);
    for (int i = 0; i < eta; ++i) in_set[ranked[i]] = 1;
  }
  for (const Arc& a : dg.arcs()) {
    if (in_set[a.tail] && in_set[a.head]) arcs.push_back(a.id);
  }
  return arcs;
}

}  // namespace lanealloc
