#include "lanealloc/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "lanealloc/evaluation.hpp"
#include "lanealloc/paths.hpp"

namespace lanealloc {

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kTopDown:
      return "top_down";
    case BaselineKind::kBottomUpCar:
      return "bottom_up_car";
    case BaselineKind::kBottomUpBike:
      return "bottom_up_bike";
  }
  return "top_down";
}

BaselineKind baseline_from_string(const std::string& tag) {
  if (tag == "top_down") return BaselineKind::kTopDown;
  if (tag == "bottom_up_car") return BaselineKind::kBottomUpCar;
  if (tag == "bottom_up_bike") return BaselineKind::kBottomUpBike;
  throw std::invalid_argument("unknown baseline: " + tag);
}

namespace {

std::vector<long> street_counts(const LaneDigraph& dg, const EdgeWeighting& w, const OdMatrix& od) {
  const Betweenness b = od_betweenness(dg, w, od);
  std::vector<long> counts(dg.streets().num_streets(), 0);
  for (std::size_t a = 0; a < b.arc_counts.size(); ++a) counts[a / 2] += b.arc_counts[a];
  return counts;
}

// Candidate streets ordered by count (ascending or descending), ties by edge id.
std::vector<StreetIndex> ranked(const StreetGraph& g, const std::vector<long>& counts,
                                const std::vector<bool>& eligible, bool highest_first) {
  std::vector<StreetIndex> order;
  for (std::size_t s = 0; s < eligible.size(); ++s) {
    if (eligible[s]) order.push_back(static_cast<StreetIndex>(s));
  }
  std::sort(order.begin(), order.end(), [&](StreetIndex a, StreetIndex b) {
    if (counts[a] != counts[b]) return highest_first ? counts[a] > counts[b] : counts[a] < counts[b];
    return g.street(a).id < g.street(b).id;
  });
  return order;
}

std::vector<NetworkDesign> top_down(const LaneDigraph& dg, const OdMatrix& od, double speed) {
  if (!(speed > 0.0)) throw std::invalid_argument("top_down: car speed must be positive");
  const StreetGraph& g = dg.streets();
  const NetworkDesign all_car = all_car_design(dg);
  NetworkDesign d;
  d.streets.assign(g.num_streets(), StreetAllocation{0, 0, 1});
  d.provenance = {"top_down", 0.0, 0, 0, speed};
  std::vector<NetworkDesign> out{d};
  std::vector<bool> bike(g.num_streets(), true);
  for (std::size_t step = 1; step <= g.num_streets(); ++step) {
    const auto counts = street_counts(dg, design_bike_weights(d, dg), od);
    const StreetIndex s = ranked(g, counts, bike, false).front();
    d.streets[s] = all_car.streets[s];
    bike[s] = false;
    d.provenance.iteration = static_cast<int>(step);
    out.push_back(d);
  }
  return out;
}

std::vector<NetworkDesign> bottom_up(const LaneDigraph& dg, const OdMatrix& od, bool by_bike) {
  const StreetGraph& g = dg.streets();
  NetworkDesign d = all_car_design(dg);
  d.provenance = {by_bike ? "bottom_up_bike" : "bottom_up_car", 0.0, 0, 0, std::nullopt};
  std::vector<NetworkDesign> out{d};
  std::vector<bool> car(g.num_streets(), true);
  std::vector<bool> active = car_arcs(d, dg);
  for (int step = 1;; ++step) {
    const EdgeWeighting w = by_bike ? design_bike_weights(d, dg) : design_car_weights(d, dg);
    const auto counts = street_counts(dg, w, od);
    StreetIndex chosen = -1;
    for (StreetIndex s : ranked(g, counts, car, by_bike)) {
      const ArcId f = LaneDigraph::forward_arc(s);
      const ArcId b = LaneDigraph::backward_arc(s);
      const bool had_f = active[f];
      const bool had_b = active[b];
      active[f] = active[b] = false;
      if (is_strongly_connected(dg, active)) {
        chosen = s;
        break;
      }
      active[f] = had_f;
      active[b] = had_b;
    }
    if (chosen < 0) break;
    d.streets[chosen] = {0, 0, 1};
    car[chosen] = false;
    d.provenance.iteration = step;
    out.push_back(d);
  }
  return out;
}

}  // namespace

std::vector<NetworkDesign> run_baseline(const LaneDigraph& dg, const OdMatrix& od,
                                        const BaselineVariant& variant) {
  switch (variant.kind) {
    case BaselineKind::kTopDown:
      return top_down(dg, od, variant.bike_priority_car_speed_kmh);
    case BaselineKind::kBottomUpCar:
      return bottom_up(dg, od, false);
    case BaselineKind::kBottomUpBike:
      return bottom_up(dg, od, true);
  }
  throw std::invalid_argument("run_baseline: unknown variant");
}

}  // namespace lanealloc
