#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lanealloc/graph.hpp"
#include "lanealloc/lp_model.hpp"

namespace lanealloc {

/// Integral lanes on one street. `bike` counts bidirectional bike lanes and
/// uses `bike` units of capacity.
struct StreetAllocation {
  int car_fwd = 0;
  int car_bwd = 0;
  int bike = 0;

  int units() const { return car_fwd + car_bwd + bike; }
  friend bool operator==(const StreetAllocation&, const StreetAllocation&) = default;
  friend auto operator<=>(const StreetAllocation&, const StreetAllocation&) = default;
};

struct Provenance {
  std::string algorithm;
  double gamma = 0.0;
  int k = 0;
  int iteration = 0;
  // Bike streets stay open to cars in both directions at this speed.
  std::optional<double> car_speed_override_kmh;
};

struct NetworkDesign {
  std::vector<StreetAllocation> streets;
  Provenance provenance;

  int num_bike_streets() const;
};

/// Arcs usable by cars: some car lane in their direction, or, under a speed
/// override, any bike lane on the street.
std::vector<bool> car_arcs(const NetworkDesign& d, const LaneDigraph& dg);

/// Every violated design invariant, empty when the design is valid.
std::vector<std::string> design_violations(const NetworkDesign& d, const LaneDigraph& dg);
/// Throws InvalidInstance with the first violation.
void validate_design(const NetworkDesign& d, const LaneDigraph& dg);

/// True when the streets with positive car units can be given lane
/// directions that make the car network strongly connected. Two or more
/// units allow both directions; a single unit is one-way.
bool car_orientable(const StreetGraph& g, const std::vector<int>& car_units);

/// Turns per-street bike lanes into a complete design: remaining capacity
/// becomes car lanes, one per direction first, the rest towards the
/// direction with the larger `car_preference` (per arc). One-way streets
/// take their preferred direction unless that would disconnect the car
/// network. Throws InvalidInstance when no orientation exists.
NetworkDesign materialize(const LaneDigraph& dg, const std::vector<int>& bike_lanes,
                          const std::vector<double>& car_preference);

/// One car lane per direction wherever capacity allows.
NetworkDesign all_car_design(const LaneDigraph& dg);

/// Bike lane count per street implied by a fixed set (0 for unlisted streets).
std::vector<int> fixed_bike_lanes(const FixedSet& fixed, const StreetGraph& g);

std::string design_to_json(const NetworkDesign& d, const StreetGraph& g);
NetworkDesign design_from_json(const std::string& text, const StreetGraph& g);

}  // namespace lanealloc
