#include "lanealloc/allocator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "lanealloc/flow_solver.hpp"
#include "lanealloc/paths.hpp"

namespace lanealloc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::vector<NetworkDesign> round_and_refix(const LaneDigraph& dg, const OdMatrix& od,
                                           double gamma, int k, const FixedSet& fixed0,
                                           const RoundingOptions& options) {
  if (k < 1) throw std::invalid_argument("round_and_refix: k must be >= 1");
  const StreetGraph& g = dg.streets();
  validate_fixed(fixed0, g);
  const std::size_t num_streets = g.num_streets();

  std::vector<int> bike = fixed_bike_lanes(fixed0, g);
  std::vector<bool> fixed(num_streets, false);
  for (const FixedLane& f : fixed0) fixed[*g.find_street(f.edge_id)] = true;
  std::vector<int> car_units(num_streets);
  for (std::size_t s = 0; s < num_streets; ++s) {
    car_units[s] = g.street(static_cast<StreetIndex>(s)).capacity - bike[s];
  }
  if (!car_orientable(g, car_units)) {
    throw InvalidInstance("fixed lanes leave no strongly connected car network");
  }

  auto t0 = Clock::now();
  ModelOptions mo;
  mo.gamma = gamma;
  mo.fixed = fixed0;
  mo.eta = options.eta;
  const LpModel model = build_lp(dg, od, mo);
  FlowLpSession session(dg, od, model);
  if (options.stats) options.stats->init_seconds += seconds_since(t0);

  // Streets in ascending edge id, the tie order of the ranking.
  std::vector<StreetIndex> by_id(num_streets);
  std::iota(by_id.begin(), by_id.end(), 0);
  std::sort(by_id.begin(), by_id.end(),
            [&](StreetIndex a, StreetIndex b) { return g.street(a).id < g.street(b).id; });

  auto pin_bike = [&](StreetIndex s, int value) {
    for (ArcId a : {LaneDigraph::forward_arc(s), LaneDigraph::backward_arc(s)}) {
      session.pin(model.index.cap_column(a, CapKind::kBike), value);
    }
  };

  std::vector<NetworkDesign> designs;
  int streets_fixed = static_cast<int>(std::count(fixed.begin(), fixed.end(), true));
  const int total = static_cast<int>(num_streets);
  int iteration = 0;
  while (streets_fixed < total) {
    t0 = Clock::now();
    const LpSolution sol = session.solve();
    if (options.stats) {
      options.stats->solve_seconds += seconds_since(t0);
      ++options.stats->lp_solves;
      options.stats->simplex_iterations += sol.iterations;
      if (iteration == 0) options.stats->relaxed_objective.push_back(sol.objective);
    }
    if (!sol.optimal()) {
      throw SolverFailure(std::string("LP solve ended ") + to_string(sol.status) +
                          " at gamma " + std::to_string(gamma));
    }
    const Capacities caps = extract_capacities(model.index, sol.values);

    std::vector<StreetIndex> order;
    for (StreetIndex s : by_id) {
      if (!fixed[s]) order.push_back(s);
    }
    auto lambda_b = [&](StreetIndex s) {
      return 0.5 * (caps.bike[LaneDigraph::forward_arc(s)] +
                    caps.bike[LaneDigraph::backward_arc(s)]);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](StreetIndex a, StreetIndex b) { return lambda_b(a) > lambda_b(b); });
    if (order.size() > static_cast<std::size_t>(k)) order.resize(k);

    for (StreetIndex s : order) {
      // Everything not yet fixed as bike still counts as car capacity.
      car_units[s] -= 1;
      if (car_orientable(g, car_units)) {
        bike[s] = 1;
        pin_bike(s, 1);
      } else {
        car_units[s] += 1;
        pin_bike(s, 0);
      }
      fixed[s] = true;
      ++streets_fixed;
    }

    NetworkDesign d = materialize(dg, bike, caps.car);
    d.provenance = {"optimize", gamma, k, iteration, std::nullopt};
    designs.push_back(std::move(d));
    ++iteration;
    if (options.progress &&
        !options.progress({gamma, iteration, streets_fixed, total})) {
      throw Cancelled();
    }
  }
  return designs;
}

RunResult pareto_run(const LaneDigraph& dg, const OdMatrix& od, const std::vector<double>& gammas,
                     int k, const FixedSet& fixed0, const RoundingOptions& options) {
  if (gammas.empty()) throw std::invalid_argument("pareto_run: no gamma values");
  RunResult result;
  result.reference = evaluate_times(all_car_design(dg), dg, od);
  for (double gamma : gammas) {
    for (NetworkDesign& d : round_and_refix(dg, od, gamma, k, fixed0, options)) {
      ParetoPoint p = evaluate_design(d, dg, od, result.reference);
      p.design_index = static_cast<int>(result.designs.size());
      result.points.push_back(std::move(p));
      result.designs.push_back(std::move(d));
    }
  }
  result.frontier = pareto_filter(result.points);
  return result;
}

RelaxedSolution solve_relaxed(const LaneDigraph& dg, const OdMatrix& od, double gamma,
                              std::optional<int> eta) {
  ModelOptions mo;
  mo.gamma = gamma;
  mo.eta = eta;
  const LpModel model = build_lp(dg, od, mo);
  RelaxedSolution r;
  r.solution = solve_flow_lp(dg, od, model);
  if (!r.solution.optimal()) {
    throw SolverFailure(std::string("LP solve ended ") + to_string(r.solution.status));
  }
  r.caps = extract_capacities(model.index, r.solution.values);
  r.dims = dimensions(model.index, model.lp);
  return r;
}

LpSolution solve_with_capacities(const LaneDigraph& dg, const OdMatrix& od, double gamma,
                                 const Capacities& caps) {
  ModelOptions mo;
  mo.gamma = gamma;
  const LpModel model = build_lp(dg, od, mo);
  FlowLpSession session(dg, od, model);
  for (std::size_t a = 0; a < dg.num_arcs(); ++a) {
    const auto arc = static_cast<ArcId>(a);
    session.pin(model.index.cap_column(arc, CapKind::kCar), std::max(0.0, caps.car[a]));
    session.pin(model.index.cap_column(arc, CapKind::kBike), std::max(0.0, caps.bike[a]));
  }
  return session.solve();
}

std::uint64_t enumeration_size(const StreetGraph& g) {
  std::uint64_t total = 1;
  for (const Street& s : g.streets()) {
    const auto c = static_cast<std::uint64_t>(s.capacity);
    total *= (c + 1) * (c + 2) / 2;
    if (total > kMaxEnumeration) return kMaxEnumeration + 1;
  }
  return total;
}

namespace {

// Every (car_fwd, car_bwd, bike) using the whole capacity, in lexicographic order.
std::vector<StreetAllocation> street_options(int capacity) {
  std::vector<StreetAllocation> out;
  for (int f = 0; f <= capacity; ++f) {
    for (int b = 0; f + b <= capacity; ++b) out.push_back({f, b, capacity - f - b});
  }
  return out;
}

// Dense Dijkstra; enumeration-sized graphs have a handful of nodes.
class SmallPaths {
 public:
  SmallPaths(const LaneDigraph& dg, const OdMatrix& od) : dg_(dg) {
    for (const OdPair& p : od.pairs) {
      if (p.is_aux) continue;
      const auto i = static_cast<std::size_t>(
          std::find(sources_.begin(), sources_.end(), p.s) - sources_.begin());
      if (i == sources_.size()) {
        sources_.push_back(p.s);
        targets_.emplace_back();
      }
      targets_[i].push_back({p.t, p.weight_bike * p.flow, p.weight_car * p.flow});
    }
    dist_.resize(dg.num_nodes());
    done_.resize(dg.num_nodes());
  }

  // Weighted totals for the given per-arc costs (negative = absent arc).
  // Returns false when a pair is unreachable.
  bool totals(const std::vector<double>& cost, bool car, double& out) {
    out = 0.0;
    for (std::size_t i = 0; i < sources_.size(); ++i) {
      run(cost, sources_[i]);
      for (const Target& t : targets_[i]) {
        if (!std::isfinite(dist_[t.node])) return false;
        out += (car ? t.weight_car : t.weight_bike) * dist_[t.node];
      }
    }
    return true;
  }

 private:
  struct Target {
    NodeIndex node;
    double weight_bike;
    double weight_car;
  };

  void run(const std::vector<double>& cost, NodeIndex s) {
    const std::size_t n = dist_.size();
    std::fill(dist_.begin(), dist_.end(), std::numeric_limits<double>::infinity());
    std::fill(done_.begin(), done_.end(), 0);
    dist_[s] = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      int v = -1;
      for (std::size_t x = 0; x < n; ++x) {
        if (!done_[x] && std::isfinite(dist_[x]) && (v < 0 || dist_[x] < dist_[v])) {
          v = static_cast<int>(x);
        }
      }
      if (v < 0) break;
      done_[v] = 1;
      for (ArcId a : dg_.out_arcs(v)) {
        if (cost[a] < 0.0) continue;
        const NodeIndex h = dg_.arc(a).head;
        dist_[h] = std::min(dist_[h], dist_[v] + cost[a]);
      }
    }
  }

  const LaneDigraph& dg_;
  std::vector<NodeIndex> sources_;
  std::vector<std::vector<Target>> targets_;
  std::vector<double> dist_;
  std::vector<char> done_;
};

// Visits every connected allocation in lexicographic order with its totals.
template <class Visit>
void enumerate(const LaneDigraph& dg, const OdMatrix& od, Visit&& visit) {
  const StreetGraph& g = dg.streets();
  if (enumeration_size(g) > kMaxEnumeration) {
    throw std::length_error("brute force: more than " + std::to_string(kMaxEnumeration) +
                            " allocations");
  }
  const std::size_t num_streets = g.num_streets();
  std::vector<std::vector<StreetAllocation>> options(num_streets);
  for (std::size_t s = 0; s < num_streets; ++s) {
    options[s] = street_options(g.street(static_cast<StreetIndex>(s)).capacity);
  }
  SmallPaths paths(dg, od);
  std::vector<std::size_t> digit(num_streets, 0);
  std::vector<double> car_cost(dg.num_arcs());
  std::vector<double> bike_cost(dg.num_arcs());
  std::vector<bool> active(dg.num_arcs());
  std::vector<StreetAllocation> alloc(num_streets);
  for (;;) {
    for (std::size_t s = 0; s < num_streets; ++s) {
      const StreetAllocation& a = options[s][digit[s]];
      alloc[s] = a;
      const ArcId f = LaneDigraph::forward_arc(static_cast<StreetIndex>(s));
      const ArcId b = LaneDigraph::backward_arc(static_cast<StreetIndex>(s));
      active[f] = a.car_fwd > 0;
      active[b] = a.car_bwd > 0;
      car_cost[f] = a.car_fwd > 0 ? dg.arc(f).t_car : -1.0;
      car_cost[b] = a.car_bwd > 0 ? dg.arc(b).t_car : -1.0;
      const bool any_car = a.car_fwd > 0 || a.car_bwd > 0;
      bike_cost[f] = a.bike > 0 ? dg.arc(f).t_bike : (any_car ? dg.arc(f).t_shared : -1.0);
      bike_cost[b] = a.bike > 0 ? dg.arc(b).t_bike : (any_car ? dg.arc(b).t_shared : -1.0);
    }
    double car = 0.0;
    double bike = 0.0;
    if (is_strongly_connected(dg, active) && paths.totals(car_cost, true, car) &&
        paths.totals(bike_cost, false, bike)) {
      visit(alloc, DesignTimes{bike, car});
    }
    // Odometer with the last street fastest keeps lexicographic order.
    std::size_t s = num_streets;
    while (s > 0) {
      --s;
      if (++digit[s] < options[s].size()) break;
      digit[s] = 0;
      if (s == 0) return;
    }
    if (num_streets == 0) return;
  }
}

}  // namespace

OracleResult brute_force_optimum(const LaneDigraph& dg, const OdMatrix& od, double gamma) {
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  enumerate(dg, od, [&](const std::vector<StreetAllocation>& alloc, const DesignTimes& t) {
    const double obj = design_objective(t, gamma);
    if (obj < best.objective) {
      best.objective = obj;
      best.design.streets = alloc;
    }
  });
  if (!std::isfinite(best.objective)) {
    throw InvalidInstance("brute force: no allocation keeps the car network connected");
  }
  best.design.provenance = {"oracle", gamma, 0, 0, std::nullopt};
  return best;
}

RunResult brute_force_frontier(const LaneDigraph& dg, const OdMatrix& od,
                               const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("brute_force_frontier: no gamma values");
  std::vector<OracleResult> best(gammas.size());
  for (auto& b : best) b.objective = std::numeric_limits<double>::infinity();
  enumerate(dg, od, [&](const std::vector<StreetAllocation>& alloc, const DesignTimes& t) {
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      const double obj = design_objective(t, gammas[i]);
      if (obj < best[i].objective) {
        best[i].objective = obj;
        best[i].design.streets = alloc;
      }
    }
  });
  RunResult result;
  result.reference = evaluate_times(all_car_design(dg), dg, od);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!std::isfinite(best[i].objective)) {
      throw InvalidInstance("brute force: no allocation keeps the car network connected");
    }
    NetworkDesign d = std::move(best[i].design);
    d.provenance = {"oracle", gammas[i], 0, 0, std::nullopt};
    ParetoPoint p = evaluate_design(d, dg, od, result.reference);
    p.design_index = static_cast<int>(result.designs.size());
    result.points.push_back(std::move(p));
    result.designs.push_back(std::move(d));
  }
  result.frontier = pareto_filter(result.points);
  return result;
}

}  // namespace lanealloc
