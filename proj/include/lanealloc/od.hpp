#pragma once

#include <string>
#include <vector>

#include "lanealloc/graph.hpp"

namespace lanealloc {

struct OdPair {
  NodeIndex s = 0;
  NodeIndex t = 0;
  double weight_bike = 1.0;
  double weight_car = 1.0;
  // Required flow; 1 in every bundled experiment.
  int flow = 1;
  bool is_aux = false;
};

/// Demand pairs plus the auxiliary connectivity chain.
struct OdMatrix {
  std::vector<OdPair> pairs;

  std::size_t num_demand() const;
  std::size_t num_aux() const;
};

/// Throws InvalidInstance on the first violated invariant: s == t, node out of
/// range, duplicate demand pair, malformed auxiliary pair, or auxiliary pairs
/// that do not form one Hamiltonian cycle.
void validate_od(const OdMatrix& od, std::size_t num_nodes);

/// CSV with header `s,t,weight_bike,weight_car,flow,is_aux`; s and t are
/// node ids of `g`.
std::string od_to_csv(const OdMatrix& od, const StreetGraph& g);
OdMatrix od_from_csv(const std::string& text, const StreetGraph& g);
OdMatrix load_od(const std::string& path, const StreetGraph& g);
void save_od(const OdMatrix& od, const StreetGraph& g, const std::string& path);

}  // namespace lanealloc
