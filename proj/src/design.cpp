#include "lanealloc/design.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "lanealloc/paths.hpp"

namespace lanealloc {

using Json = nlohmann::ordered_json;

int NetworkDesign::num_bike_streets() const {
  return static_cast<int>(
      std::count_if(streets.begin(), streets.end(), [](const auto& s) { return s.bike > 0; }));
}

std::vector<bool> car_arcs(const NetworkDesign& d, const LaneDigraph& dg) {
  std::vector<bool> active(dg.num_arcs(), false);
  const bool override_speed = d.provenance.car_speed_override_kmh.has_value();
  for (std::size_t s = 0; s < d.streets.size(); ++s) {
    const StreetAllocation& a = d.streets[s];
    const auto si = static_cast<StreetIndex>(s);
    const bool open = override_speed && a.bike > 0;
    active[LaneDigraph::forward_arc(si)] = a.car_fwd > 0 || open;
    active[LaneDigraph::backward_arc(si)] = a.car_bwd > 0 || open;
  }
  return active;
}

std::vector<std::string> design_violations(const NetworkDesign& d, const LaneDigraph& dg) {
  const StreetGraph& g = dg.streets();
  std::vector<std::string> out;
  if (d.streets.size() != g.num_streets()) {
    out.push_back("design has " + std::to_string(d.streets.size()) + " streets, graph has " +
                  std::to_string(g.num_streets()));
    return out;
  }
  for (std::size_t s = 0; s < d.streets.size(); ++s) {
    const StreetAllocation& a = d.streets[s];
    const std::string where = "edge " + std::to_string(g.street(static_cast<StreetIndex>(s)).id);
    if (a.car_fwd < 0 || a.car_bwd < 0 || a.bike < 0) {
      out.push_back(where + ": negative lane count");
    }
    // Bike lanes are symmetric by construction, so 0.5 * (b + b) = b units.
    if (a.units() > g.street(static_cast<StreetIndex>(s)).capacity) {
      out.push_back(where + ": lanes exceed capacity");
    }
  }
  if (!is_strongly_connected(dg, car_arcs(d, dg))) {
    out.push_back("car network is not strongly connected");
  }
  return out;
}

void validate_design(const NetworkDesign& d, const LaneDigraph& dg) {
  auto v = design_violations(d, dg);
  if (!v.empty()) throw InvalidInstance("invalid design: " + v.front());
}

namespace {

// Streets with a single unit whose removal disconnects the streets with
// positive units. Parallel streets are distinct edges.
std::vector<bool> single_unit_bridges(const StreetGraph& g, const std::vector<int>& units) {
  const std::size_t n = g.num_nodes();
  std::vector<std::vector<std::pair<NodeIndex, StreetIndex>>> adj(n);
  for (std::size_t s = 0; s < g.num_streets(); ++s) {
    if (units[s] <= 0) continue;
    const Street& st = g.street(static_cast<StreetIndex>(s));
    adj[st.u].emplace_back(st.v, static_cast<StreetIndex>(s));
    adj[st.v].emplace_back(st.u, static_cast<StreetIndex>(s));
  }
  std::vector<bool> bridge(g.num_streets(), false);
  std::vector<int> order(n, -1);
  std::vector<int> low(n, 0);
  int clock = 0;
  // Iterative DFS; each frame remembers the street it entered by.
  struct Frame {
    NodeIndex v;
    StreetIndex via;
    std::size_t next;
  };
  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] >= 0) continue;
    std::vector<Frame> stack{{static_cast<NodeIndex>(root), -1, 0}};
    order[root] = low[root] = clock++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < adj[f.v].size()) {
        auto [x, s] = adj[f.v][f.next++];
        if (s == f.via) continue;
        if (order[x] < 0) {
          order[x] = low[x] = clock++;
          stack.push_back({x, s, 0});
        } else {
          low[f.v] = std::min(low[f.v], order[x]);
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          NodeIndex parent = stack.back().v;
          low[parent] = std::min(low[parent], low[done.v]);
          if (low[done.v] > order[parent] && units[done.via] == 1) bridge[done.via] = true;
        }
      }
    }
  }
  return bridge;
}

bool connected(const StreetGraph& g, const std::vector<int>& units) {
  std::vector<int> parent(g.num_nodes());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = g.num_nodes();
  for (std::size_t s = 0; s < g.num_streets(); ++s) {
    if (units[s] <= 0) continue;
    const Street& st = g.street(static_cast<StreetIndex>(s));
    int a = find(st.u);
    int b = find(st.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components <= 1;
}

}  // namespace

bool car_orientable(const StreetGraph& g, const std::vector<int>& car_units) {
  if (!connected(g, car_units)) return false;
  auto bridges = single_unit_bridges(g, car_units);
  return std::none_of(bridges.begin(), bridges.end(), [](bool b) { return b; });
}

NetworkDesign materialize(const LaneDigraph& dg, const std::vector<int>& bike_lanes,
                          const std::vector<double>& car_preference) {
  const StreetGraph& g = dg.streets();
  const std::size_t num_streets = g.num_streets();
  NetworkDesign d;
  d.streets.resize(num_streets);
  std::vector<int> units(num_streets);
  for (std::size_t s = 0; s < num_streets; ++s) {
    d.streets[s].bike = bike_lanes[s];
    units[s] = g.street(static_cast<StreetIndex>(s)).capacity - bike_lanes[s];
    if (units[s] < 0) throw InvalidInstance("bike lanes exceed capacity");
  }
  if (!car_orientable(g, units)) {
    throw InvalidInstance("no lane orientation keeps the car network strongly connected");
  }

  auto prefers_forward = [&](std::size_t s) {
    const auto si = static_cast<StreetIndex>(s);
    return car_preference[LaneDigraph::forward_arc(si)] >=
           car_preference[LaneDigraph::backward_arc(si)];
  };
  std::vector<bool> active(dg.num_arcs(), false);
  std::vector<std::size_t> one_way;
  for (std::size_t s = 0; s < num_streets; ++s) {
    StreetAllocation& a = d.streets[s];
    const auto si = static_cast<StreetIndex>(s);
    if (units[s] >= 2) {
      a.car_fwd = a.car_bwd = 1;
      (prefers_forward(s) ? a.car_fwd : a.car_bwd) += units[s] - 2;
    }
    if (units[s] >= 1) {
      active[LaneDigraph::forward_arc(si)] = true;
      active[LaneDigraph::backward_arc(si)] = true;
    }
    if (units[s] == 1) one_way.push_back(s);
  }
  // Undecided one-way streets stay open in both directions while the others
  // are oriented; an orientable mixed network always admits one direction.
  for (std::size_t s : one_way) {
    const auto si = static_cast<StreetIndex>(s);
    const ArcId fwd = LaneDigraph::forward_arc(si);
    const ArcId bwd = LaneDigraph::backward_arc(si);
    bool forward = prefers_forward(s);
    active[forward ? bwd : fwd] = false;
    if (!is_strongly_connected(dg, active)) {
      active[forward ? bwd : fwd] = true;
      active[forward ? fwd : bwd] = false;
      forward = !forward;
      if (!is_strongly_connected(dg, active)) {
        throw InvalidInstance("lane orientation failed on edge " + std::to_string(g.street(si).id));
      }
    }
    (forward ? d.streets[s].car_fwd : d.streets[s].car_bwd) = 1;
  }
  return d;
}

NetworkDesign all_car_design(const LaneDigraph& dg) {
  NetworkDesign d = materialize(dg, std::vector<int>(dg.streets().num_streets(), 0),
                                std::vector<double>(dg.num_arcs(), 0.0));
  d.provenance.algorithm = "all_car";
  return d;
}

std::vector<int> fixed_bike_lanes(const FixedSet& fixed, const StreetGraph& g) {
  std::vector<int> bike(g.num_streets(), 0);
  for (const FixedLane& f : fixed) {
    if (f.mode == LaneMode::kBike) bike[*g.find_street(f.edge_id)] = f.value;
  }
  return bike;
}

std::string design_to_json(const NetworkDesign& d, const StreetGraph& g) {
  Json prov = {{"algorithm", d.provenance.algorithm},
               {"gamma", d.provenance.gamma},
               {"k", d.provenance.k},
               {"iteration", d.provenance.iteration}};
  if (d.provenance.car_speed_override_kmh) {
    prov["car_speed_override_kmh"] = *d.provenance.car_speed_override_kmh;
  }
  Json streets = Json::array();
  for (std::size_t s = 0; s < d.streets.size(); ++s) {
    const StreetAllocation& a = d.streets[s];
    streets.push_back({{"edge_id", g.street(static_cast<StreetIndex>(s)).id},
                       {"car_fwd", a.car_fwd},
                       {"car_bwd", a.car_bwd},
                       {"bike", a.bike}});
  }
  Json doc = {{"provenance", std::move(prov)}, {"streets", std::move(streets)}};
  return doc.dump(1) + "\n";
}

NetworkDesign design_from_json(const std::string& text, const StreetGraph& g) {
  NetworkDesign d;
  try {
    Json doc = Json::parse(text);
    const Json& prov = doc.at("provenance");
    d.provenance.algorithm = prov.at("algorithm").get<std::string>();
    d.provenance.gamma = prov.at("gamma").get<double>();
    d.provenance.k = prov.at("k").get<int>();
    d.provenance.iteration = prov.at("iteration").get<int>();
    if (prov.contains("car_speed_override_kmh")) {
      d.provenance.car_speed_override_kmh = prov.at("car_speed_override_kmh").get<double>();
    }
    d.streets.resize(g.num_streets());
    std::vector<bool> seen(g.num_streets(), false);
    for (const Json& js : doc.at("streets")) {
      const auto id = js.at("edge_id").get<std::int64_t>();
      auto s = g.find_street(id);
      if (!s) throw InvalidInstance("design references unknown edge " + std::to_string(id));
      if (seen[*s]) throw InvalidInstance("design lists edge " + std::to_string(id) + " twice");
      seen[*s] = true;
      d.streets[*s] = {js.at("car_fwd").get<int>(), js.at("car_bwd").get<int>(),
                       js.at("bike").get<int>()};
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw InvalidInstance("design does not cover every street");
    }
  } catch (const Json::exception& e) {
    throw InvalidInstance(std::string("design JSON error: ") + e.what());
  }
  return d;
}

}  // namespace lanealloc
