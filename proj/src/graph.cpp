#include "lanealloc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lanealloc {

namespace {

using Json = nlohmann::ordered_json;

std::string where_street(const Street& s) {
  return "edge " + std::to_string(s.id);
}

bool undirected_connected(std::size_t n, const std::vector<Street>& streets) {
  if (n == 0) return true;
  std::vector<std::vector<NodeIndex>> adj(n);
  for (const auto& s : streets) {
    adj[s.u].push_back(s.v);
    adj[s.v].push_back(s.u);
  }
  std::vector<char> seen(n, 0);
  std::vector<NodeIndex> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeIndex v = stack.back();
    stack.pop_back();
    for (NodeIndex w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

}  // namespace

StreetGraph::StreetGraph(std::vector<Node> nodes, std::vector<Street> streets)
    : nodes_(std::move(nodes)), streets_(std::move(streets)) {
  if (nodes_.empty()) throw InvalidInstance("street graph has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& nd = nodes_[i];
    if (!std::isfinite(nd.x_km) || !std::isfinite(nd.y_km) ||
        !std::isfinite(nd.elevation_m)) {
      throw InvalidInstance("node " + std::to_string(nd.id) +
                            ": non-finite coordinate");
    }
    if (!node_by_id_.emplace(nd.id, static_cast<NodeIndex>(i)).second) {
      throw InvalidInstance("node " + std::to_string(nd.id) + ": duplicate node_id");
    }
  }
  const auto n = static_cast<NodeIndex>(nodes_.size());
  for (std::size_t i = 0; i < streets_.size(); ++i) {
    const Street& s = streets_[i];
    if (!street_by_id_.emplace(s.id, static_cast<StreetIndex>(i)).second) {
      throw InvalidInstance(where_street(s) + ": duplicate edge_id");
    }
    if (s.u < 0 || s.u >= n || s.v < 0 || s.v >= n) {
      throw InvalidInstance(where_street(s) + ": endpoint references unknown node");
    }
    if (s.u == s.v) throw InvalidInstance(where_street(s) + ": self-loop");
    if (!(s.length_km > 0.0) || !std::isfinite(s.length_km)) {
      throw InvalidInstance(where_street(s) + ": length_km must be > 0");
    }
    if (!(s.speed_limit_kmh > 0.0) || !std::isfinite(s.speed_limit_kmh)) {
      throw InvalidInstance(where_street(s) + ": speed_limit_kmh must be > 0");
    }
    if (!std::isfinite(s.gradient_pct)) {
      throw InvalidInstance(where_street(s) + ": gradient_pct must be finite");
    }
    if (s.capacity < 1) throw InvalidInstance(where_street(s) + ": capacity must be >= 1");
  }
  if (!undirected_connected(nodes_.size(), streets_)) {
    throw InvalidInstance("street graph is not connected");
  }
}

std::optional<NodeIndex> StreetGraph::find_node(std::int64_t id) const {
  auto it = node_by_id_.find(id);
  if (it == node_by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<StreetIndex> StreetGraph::find_street(std::int64_t id) const {
  auto it = street_by_id_.find(id);
  if (it == street_by_id_.end()) return std::nullopt;
  return it->second;
}

int StreetGraph::total_capacity() const {
  int total = 0;
  for (const auto& s : streets_) total += s.capacity;
  return total;
}

double bike_speed_kmh(double gradient_pct) {
  if (gradient_pct > 0.0) {
    return std::max(kMinBikeSpeedKmh,
                    kBaseBikeSpeedKmh - kUphillSlowdownPerPct * gradient_pct);
  }
  return kBaseBikeSpeedKmh - kDownhillSpeedupPerPct * gradient_pct;
}

double car_time(double length_km, double speed_limit_kmh) {
  return length_km / speed_limit_kmh;
}

double bike_time(double length_km, double gradient_pct) {
  return length_km / bike_speed_kmh(gradient_pct);
}

double shared_time(double length_km, double gradient_pct) {
  return kSharedLanePenalty * bike_time(length_km, gradient_pct);
}

LaneDigraph::LaneDigraph(StreetGraph g) : graph_(std::move(g)) {
  const auto& streets = graph_.streets();
  arcs_.reserve(2 * streets.size());
  for (std::size_t i = 0; i < streets.size(); ++i) {
    const Street& s = streets[i];
    for (int dir = 0; dir < 2; ++dir) {
      Arc a;
      a.id = static_cast<ArcId>(arcs_.size());
      a.street = static_cast<StreetIndex>(i);
      a.tail = dir == 0 ? s.u : s.v;
      a.head = dir == 0 ? s.v : s.u;
      a.length_km = s.length_km;
      a.gradient_pct = dir == 0 ? s.gradient_pct : -s.gradient_pct;
      a.speed_limit_kmh = s.speed_limit_kmh;
      a.t_car = car_time(a.length_km, a.speed_limit_kmh);
      a.t_bike = bike_time(a.length_km, a.gradient_pct);
      a.t_shared = shared_time(a.length_km, a.gradient_pct);
      arcs_.push_back(a);
    }
  }

  const std::size_t n = graph_.num_nodes();
  out_offsets_.assign(n + 1, 0);
  in_offsets_.assign(n + 1, 0);
  for (const Arc& a : arcs_) {
    ++out_offsets_[a.tail + 1];
    ++in_offsets_[a.head + 1];
  }
  for (std::size_t v = 0; v < n; ++v) {
    out_offsets_[v + 1] += out_offsets_[v];
    in_offsets_[v + 1] += in_offsets_[v];
  }
  out_list_.resize(arcs_.size());
  in_list_.resize(arcs_.size());
  std::vector<std::size_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
  std::vector<std::size_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
  // Arcs are visited in id order, so each adjacency list comes out sorted.
  for (const Arc& a : arcs_) {
    out_list_[out_fill[a.tail]++] = a.id;
    in_list_[in_fill[a.head]++] = a.id;
  }
}

std::span<const ArcId> LaneDigraph::out_arcs(NodeIndex v) const {
  return {out_list_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const ArcId> LaneDigraph::in_arcs(NodeIndex v) const {
  return {in_list_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

LaneDigraph build_lane_digraph(const StreetGraph& g) { return LaneDigraph(g); }

StreetGraph street_graph_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInstance(std::string("graph JSON parse error: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges")) {
    throw InvalidInstance("graph JSON must have top-level \"nodes\" and \"edges\"");
  }
  std::vector<Node> nodes;
  std::unordered_map<std::int64_t, NodeIndex> index;
  try {
    for (const auto& jn : doc.at("nodes")) {
      Node nd;
      nd.id = jn.at("node_id").get<std::int64_t>();
      nd.x_km = jn.at("x").get<double>();
      nd.y_km = jn.at("y").get<double>();
      nd.elevation_m = jn.value("elevation", 0.0);
      index.emplace(nd.id, static_cast<NodeIndex>(nodes.size()));
      nodes.push_back(nd);
    }
    std::vector<Street> streets;
    for (const auto& je : doc.at("edges")) {
      Street s;
      s.id = je.at("edge_id").get<std::int64_t>();
      auto u = index.find(je.at("u").get<std::int64_t>());
      auto v = index.find(je.at("v").get<std::int64_t>());
      if (u == index.end() || v == index.end()) {
        throw InvalidInstance(where_street(s) + ": endpoint references unknown node");
      }
      s.u = u->second;
      s.v = v->second;
      s.length_km = je.at("length_km").get<double>();
      s.gradient_pct = je.at("gradient_pct").get<double>();
      s.speed_limit_kmh = je.at("speed_limit_kmh").get<double>();
      s.capacity = je.at("capacity").get<int>();
      streets.push_back(s);
    }
    return StreetGraph(std::move(nodes), std::move(streets));
  } catch (const Json::exception& e) {
    throw InvalidInstance(std::string("graph JSON field error: ") + e.what());
  }
}

std::string street_graph_to_json(const StreetGraph& g) {
  Json doc;
  Json jnodes = Json::array();
  for (const Node& nd : g.nodes()) {
    jnodes.push_back(
        {{"node_id", nd.id}, {"x", nd.x_km}, {"y", nd.y_km}, {"elevation", nd.elevation_m}});
  }
  Json jedges = Json::array();
  for (const Street& s : g.streets()) {
    jedges.push_back({{"edge_id", s.id},
                      {"u", g.node(s.u).id},
                      {"v", g.node(s.v).id},
                      {"length_km", s.length_km},
                      {"gradient_pct", s.gradient_pct},
                      {"speed_limit_kmh", s.speed_limit_kmh},
                      {"capacity", s.capacity}});
  }
  doc["nodes"] = std::move(jnodes);
  doc["edges"] = std::move(jedges);
  return doc.dump(1) + "\n";
}

StreetGraph load_street_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return street_graph_from_json(buf.str());
}

void save_street_graph(const StreetGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << street_graph_to_json(g);
}

}  // namespace lanealloc
