#pragma once

#include <string>
#include <vector>

#include "lanealloc/design.hpp"
#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"
#include "lanealloc/paths.hpp"

namespace lanealloc {

/// Weighted travel-time totals of one design, in hours.
struct DesignTimes {
  double bike = 0.0;  // perceived
  double car = 0.0;
};

/// Per-arc costs seen by cars and bikes under a design.
EdgeWeighting design_car_weights(const NetworkDesign& d, const LaneDigraph& dg);
EdgeWeighting design_bike_weights(const NetworkDesign& d, const LaneDigraph& dg);

/// Sum over demand pairs of weight x flow x shortest-path time. Throws
/// InvalidInstance when a demand pair has no car route.
DesignTimes evaluate_times(const NetworkDesign& d, const LaneDigraph& dg, const OdMatrix& od);

/// bike + gamma * car, the LP objective of the design.
double design_objective(const DesignTimes& t, double gamma);

struct ParetoPoint {
  double bike_time_h = 0.0;
  double car_time_h = 0.0;
  double bike_pct = 0.0;
  double car_pct = 0.0;
  int num_bike_streets = 0;
  Provenance provenance;
  std::string design_file;
  // Position of the design in the run that produced it.
  int design_index = -1;
};

/// 100 (x - x0) / x0 per coordinate. Throws std::invalid_argument on a zero
/// reference.
std::pair<double, double> to_percent(const DesignTimes& point, const DesignTimes& reference);

/// Evaluates a design and expresses it relative to the reference totals.
ParetoPoint evaluate_design(const NetworkDesign& d, const LaneDigraph& dg, const OdMatrix& od,
                            const DesignTimes& reference);

/// Nondominated points, both percentages minimized. Equal coordinates
/// collapse to the first occurrence. Sorted by car_pct ascending.
std::vector<ParetoPoint> pareto_filter(const std::vector<ParetoPoint>& points);

inline constexpr double kRefBikePct = 0.0;
inline constexpr double kRefCarPct = 50.0;

/// Area dominated by the points and bounded by the reference point, under
/// staircase interpolation.
double hypervolume(const std::vector<ParetoPoint>& frontier, double ref_bike = kRefBikePct,
                   double ref_car = kRefCarPct);

/// For each oracle point, the closest LP point in percent space (ties to the
/// lower car_pct). Duplicates removed.
std::vector<ParetoPoint> nearest_subset(const std::vector<ParetoPoint>& lp_points,
                                        const std::vector<ParetoPoint>& oracle_points);

/// 100 (lp - oracle) / oracle.
double hi_gap_pct(double lp_hi, double oracle_hi);

std::string frontier_csv_header();
std::string frontier_to_csv(const std::vector<ParetoPoint>& frontier);
std::vector<ParetoPoint> frontier_from_csv(const std::string& text);

}  // namespace lanealloc
