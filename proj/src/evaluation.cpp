#include "lanealloc/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lanealloc {

EdgeWeighting design_car_weights(const NetworkDesign& d, const LaneDigraph& dg) {
  const std::vector<bool> active = car_arcs(d, dg);
  const auto& override_speed = d.provenance.car_speed_override_kmh;
  EdgeWeighting w(dg.num_arcs());
  for (const Arc& a : dg.arcs()) {
    if (!active[a.id]) continue;
    const StreetAllocation& s = d.streets[a.street];
    const bool own_lane = (a.id & 1) == 0 ? s.car_fwd > 0 : s.car_bwd > 0;
    w[a.id] = own_lane ? a.t_car : car_time(a.length_km, *override_speed);
  }
  return w;
}

EdgeWeighting design_bike_weights(const NetworkDesign& d, const LaneDigraph& dg) {
  EdgeWeighting w(dg.num_arcs());
  for (const Arc& a : dg.arcs()) {
    const StreetAllocation& s = d.streets[a.street];
    if (s.bike > 0) {
      w[a.id] = a.t_bike;
    } else if (s.car_fwd > 0 || s.car_bwd > 0) {
      // Cycling in mixed traffic is allowed both ways, against one-way streets too.
      w[a.id] = a.t_shared;
    }
  }
  return w;
}

DesignTimes evaluate_times(const NetworkDesign& d, const LaneDigraph& dg, const OdMatrix& od) {
  if (d.streets.size() != dg.streets().num_streets()) {
    throw InvalidInstance("design does not match the street graph");
  }
  const EdgeWeighting car = design_car_weights(d, dg);
  const EdgeWeighting bike = design_bike_weights(d, dg);
  std::map<NodeIndex, std::vector<const OdPair*>> by_source;
  for (const OdPair& p : od.pairs) {
    if (!p.is_aux) by_source[p.s].push_back(&p);
  }
  DesignTimes total;
  for (const auto& [s, pairs] : by_source) {
    const std::vector<double> dc = distances_from(dg, car, s);
    const std::vector<double> db = distances_from(dg, bike, s);
    for (const OdPair* p : pairs) {
      if (!std::isfinite(dc[p->t])) {
        throw InvalidInstance("no car route from node " + std::to_string(dg.streets().node(s).id) +
                              " to node " + std::to_string(dg.streets().node(p->t).id));
      }
      if (!std::isfinite(db[p->t])) {
        throw InvalidInstance("no bike route from node " +
                              std::to_string(dg.streets().node(s).id) + " to node " +
                              std::to_string(dg.streets().node(p->t).id));
      }
      total.car += p->weight_car * p->flow * dc[p->t];
      total.bike += p->weight_bike * p->flow * db[p->t];
    }
  }
  return total;
}

double design_objective(const DesignTimes& t, double gamma) { return t.bike + gamma * t.car; }

std::pair<double, double> to_percent(const DesignTimes& point, const DesignTimes& reference) {
  if (reference.bike == 0.0 || reference.car == 0.0) {
    throw std::invalid_argument("to_percent: zero reference");
  }
  return {100.0 * (point.bike - reference.bike) / reference.bike,
          100.0 * (point.car - reference.car) / reference.car};
}

ParetoPoint evaluate_design(const NetworkDesign& d, const LaneDigraph& dg, const OdMatrix& od,
                            const DesignTimes& reference) {
  const DesignTimes t = evaluate_times(d, dg, od);
  ParetoPoint p;
  p.bike_time_h = t.bike;
  p.car_time_h = t.car;
  std::tie(p.bike_pct, p.car_pct) = to_percent(t, reference);
  p.num_bike_streets = d.num_bike_streets();
  p.provenance = d.provenance;
  return p;
}

std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points) {
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].car_pct != points[b].car_pct) return points[a].car_pct < points[b].car_pct;
    return points[a].bike_pct < points[b].bike_pct;
  });
  // Sweeping by car_pct, a point survives only if it beats every earlier bike_pct.
  std::vector<ParetoPoint> out;
  for (std::size_t i : order) {
    if (!out.empty() && points[i].bike_pct >= out.back().bike_pct) continue;
    out.push_back(points[i]);
  }
  return out;
}

double hypervolume(const std::vector<ParetoPoint>& frontier, double ref_bike, double ref_car) {
  std::vector<std::pair<double, double>> pts;
  for (const ParetoPoint& p : frontier) {
    if (p.bike_pct < ref_bike && p.car_pct < ref_car) pts.emplace_back(p.bike_pct, p.car_pct);
  }
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double best_car = ref_car;
  // Walk from the largest bike improvement towards the reference.
  for (std::size_t i = 0; i < pts.size(); ++i) {
    best_car = std::min(best_car, pts[i].second);
    const double next_x = i + 1 < pts.size() ? pts[i + 1].first : ref_bike;
    area += (next_x - pts[i].first) * (ref_car - best_car);
  }
  return area;
}

std::vector<ParetoPoint> nearest_subset(const std::vector<ParetoPoint>& lp_points,
                                        const std::vector<ParetoPoint>& oracle_points) {
  std::vector<std::size_t> chosen;
  for (const ParetoPoint& o : oracle_points) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < lp_points.size(); ++i) {
      const double d = std::hypot(lp_points[i].bike_pct - o.bike_pct,
                                  lp_points[i].car_pct - o.car_pct);
      if (d < best_d || (d == best_d && lp_points[i].car_pct < lp_points[best].car_pct)) {
        best = i;
        best_d = d;
      }
    }
    if (!lp_points.empty() && std::find(chosen.begin(), chosen.end(), best) == chosen.end()) {
      chosen.push_back(best);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<ParetoPoint> out;
  for (std::size_t i : chosen) out.push_back(lp_points[i]);
  return out;
}

double hi_gap_pct(double lp_hi, double oracle_hi) {
  if (oracle_hi == 0.0) throw std::invalid_argument("hi_gap_pct: zero oracle hypervolume");
  return 100.0 * (lp_hi - oracle_hi) / oracle_hi;
}

namespace {

std::string fmt(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double x = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw std::invalid_argument("frontier CSV: bad number '" + s + "'");
  }
  return x;
}

}  // namespace

std::string frontier_csv_header() {
  return "bike_time_h,car_time_h,bike_pct,car_pct,num_bike_streets,gamma,k,algorithm,design_file";
}

std::string frontier_to_csv(const std::vector<ParetoPoint>& frontier) {
  std::string out = frontier_csv_header() + "\n";
  for (const ParetoPoint& p : frontier) {
    out += fmt(p.bike_time_h) + "," + fmt(p.car_time_h) + "," + fmt(p.bike_pct) + "," +
           fmt(p.car_pct) + "," + std::to_string(p.num_bike_streets) + "," +
           fmt(p.provenance.gamma) + "," + std::to_string(p.provenance.k) + "," +
           p.provenance.algorithm + "," + p.design_file + "\n";
  }
  return out;
}

std::vector<ParetoPoint> frontier_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != frontier_csv_header()) {
    throw std::invalid_argument("frontier CSV: unexpected header");
  }
  std::vector<ParetoPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw std::invalid_argument("frontier CSV: expected 9 fields: " + line);
    ParetoPoint p;
    p.bike_time_h = parse_double(f[0]);
    p.car_time_h = parse_double(f[1]);
    p.bike_pct = parse_double(f[2]);
    p.car_pct = parse_double(f[3]);
    p.num_bike_streets = static_cast<int>(parse_double(f[4]));
    p.provenance.gamma = parse_double(f[5]);
    p.provenance.k = static_cast<int>(parse_double(f[6]));
    p.provenance.algorithm = f[7];
    p.design_file = f[8];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace lanealloc
