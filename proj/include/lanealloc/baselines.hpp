#pragma once

#include <string>
#include <vector>

#include "lanealloc/design.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

enum class BaselineKind { kTopDown, kBottomUpCar, kBottomUpBike };

const char* to_string(BaselineKind kind);
BaselineKind baseline_from_string(const std::string& tag);

struct BaselineVariant {
  BaselineKind kind = BaselineKind::kTopDown;
  // Car speed on bike-priority streets, top_down only.
  double bike_priority_car_speed_kmh = 10.0;
};

/// Betweenness-driven greedy sequence of designs, one per converted street,
/// starting with the initial network (all bike-priority for top_down, all
/// car for the bottom-up variants). Betweenness is recomputed after every
/// conversion and summed over both arcs of a street; ties go to the lower
/// edge id.
std::vector<NetworkDesign> run_baseline(const LaneDigraph& dg, const OdMatrix& od,
                                        const BaselineVariant& variant);

}  // namespace lanealloc
