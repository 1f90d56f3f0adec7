#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

/// Derives an independent, reproducible seed for a named purpose
/// ("graph", "od", "aux", ...) from the run seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name,
                             std::uint64_t index = 0);

/// Uniform double in [0, 1) from a 64-bit engine, identical on every platform.
double uniform01(std::mt19937_64& rng);
/// Uniform integer in [0, bound).
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

struct GenParams {
  int n = 20;
  std::uint64_t seed = 0;
  // Side of the square the nodes are scattered on; <= 0 picks 0.25 * sqrt(n).
  double side_km = 0.0;
  double speed_limit_kmh = 30.0;
  double max_gradient_pct = 10.0;
  int max_attempts = 1000;
};

/// Spatial random street network; every street has capacity 2.
StreetGraph generate_synthetic(const GenParams& params);

/// Inverse-square neighbour distribution of node u (P(u) = 0), as used by the
/// generator. Exposed for tests.
std::vector<double> neighbor_probabilities(const std::vector<Node>& nodes, NodeIndex u);

/// floor(fraction * n^2) distinct ordered demand pairs with unit weights.
/// fraction == 1 means all n(n-1) ordered pairs.
OdMatrix sample_od(const StreetGraph& g, double fraction, std::uint64_t seed);
/// Exactly `count` distinct ordered demand pairs.
OdMatrix sample_od_count(const StreetGraph& g, std::size_t count, std::uint64_t seed);
/// Every ordered pair (s, t), s != t.
OdMatrix all_pairs_od(const StreetGraph& g);

/// Appends the auxiliary chain (v1,v2), ..., (vn,v1) over a seeded shuffle.
OdMatrix extend_with_aux(const OdMatrix& od, const StreetGraph& g, std::uint64_t seed);

}  // namespace lanealloc
