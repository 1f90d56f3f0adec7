#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lanealloc {

// Dense indices used throughout the library. External ids (as they appear in
// graph files) are kept on the Node / Street records.
using NodeIndex = int;
using StreetIndex = int;
using ArcId = int;

/// Raised when an instance (graph, OD matrix, fixed set) violates an invariant.
class InvalidInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Node {
  std::int64_t id = 0;
  double x_km = 0.0;
  double y_km = 0.0;
  double elevation_m = 0.0;
};

struct Street {
  std::int64_t id = 0;
  NodeIndex u = 0;
  NodeIndex v = 0;
  double length_km = 0.0;
  // Signed, defined in the u -> v direction.
  double gradient_pct = 0.0;
  double speed_limit_kmh = 0.0;
  int capacity = 1;
};

/// Undirected street network. Parallel streets are allowed.
class StreetGraph {
 public:
  StreetGraph() = default;

  /// Builds and validates. Throws InvalidInstance on the first violation.
  /// Streets reference nodes by dense index.
  StreetGraph(std::vector<Node> nodes, std::vector<Street> streets);

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_streets() const { return streets_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Street>& streets() const { return streets_; }
  const Node& node(NodeIndex i) const { return nodes_[i]; }
  const Street& street(StreetIndex i) const { return streets_[i]; }

  std::optional<NodeIndex> find_node(std::int64_t id) const;
  std::optional<StreetIndex> find_street(std::int64_t id) const;

  /// Sum of street capacities (lane units).
  int total_capacity() const;

 private:
  std::vector<Node> nodes_;
  std::vector<Street> streets_;
  std::unordered_map<std::int64_t, NodeIndex> node_by_id_;
  std::unordered_map<std::int64_t, StreetIndex> street_by_id_;
};

// Travel-time model. All times in hours.
inline constexpr double kBaseBikeSpeedKmh = 21.6;
inline constexpr double kUphillSlowdownPerPct = 1.44;
inline constexpr double kDownhillSpeedupPerPct = 0.86;
inline constexpr double kMinBikeSpeedKmh = 1.0;
inline constexpr double kSharedLanePenalty = 2.0;

double bike_speed_kmh(double gradient_pct);
double car_time(double length_km, double speed_limit_kmh);
double bike_time(double length_km, double gradient_pct);
double shared_time(double length_km, double gradient_pct);

struct Arc {
  ArcId id = 0;
  StreetIndex street = 0;
  NodeIndex tail = 0;
  NodeIndex head = 0;
  double length_km = 0.0;
  double gradient_pct = 0.0;
  double speed_limit_kmh = 0.0;
  double t_car = 0.0;
  double t_bike = 0.0;
  double t_shared = 0.0;
};

/// Directed double cover of a street graph. Street i yields arc 2i (u -> v)
/// and arc 2i+1 (v -> u), so reverse_of(a) == a ^ 1.
class LaneDigraph {
 public:
  explicit LaneDigraph(StreetGraph g);

  const StreetGraph& streets() const { return graph_; }
  std::size_t num_nodes() const { return graph_.num_nodes(); }
  std::size_t num_arcs() const { return arcs_.size(); }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(ArcId a) const { return arcs_[a]; }

  static constexpr ArcId reverse_of(ArcId a) { return a ^ 1; }
  static constexpr ArcId forward_arc(StreetIndex s) { return 2 * s; }
  static constexpr ArcId backward_arc(StreetIndex s) { return 2 * s + 1; }

  /// Outgoing / incoming arcs of a node in ascending arc id order.
  std::span<const ArcId> out_arcs(NodeIndex v) const;
  std::span<const ArcId> in_arcs(NodeIndex v) const;

 private:
  StreetGraph graph_;
  std::vector<Arc> arcs_;
  std::vector<std::size_t> out_offsets_, in_offsets_;
  std::vector<ArcId> out_list_, in_list_;
};

LaneDigraph build_lane_digraph(const StreetGraph& g);

// Street graphs are stored as JSON with "nodes" and "edges" arrays.
StreetGraph street_graph_from_json(const std::string& text);
std::string street_graph_to_json(const StreetGraph& g);
StreetGraph load_street_graph(const std::string& path);
void save_street_graph(const StreetGraph& g, const std::string& path);

}  // namespace lanealloc
