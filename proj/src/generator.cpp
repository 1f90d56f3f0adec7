#include "lanealloc/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace lanealloc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Smooth terrain: a few seeded plane waves, amplitude in metres.
struct ElevationField {
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves;

  explicit ElevationField(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 3; ++i) {
      const double angle = 2.0 * std::numbers::pi * uniform01(rng);
      const double wavelength_km = 0.8 + 1.6 * uniform01(rng);
      const double k = 2.0 * std::numbers::pi / wavelength_km;
      waves.push_back({k * std::cos(angle), k * std::sin(angle),
                       2.0 * std::numbers::pi * uniform01(rng), 4.0 + 8.0 * uniform01(rng)});
    }
  }

  double at(double x, double y) const {
    double h = 0.0;
    for (const auto& w : waves) h += w.amplitude * std::sin(w.kx * x + w.ky * y + w.phase);
    return h;
  }
};

bool connected(std::size_t n, const std::vector<Street>& streets) {
  std::vector<NodeIndex> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<NodeIndex>(i);
  auto find = [&](NodeIndex v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::size_t components = n;
  for (const auto& s : streets) {
    NodeIndex a = find(s.u), b = find(s.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(name)) + index);
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

std::vector<double> neighbor_probabilities(const std::vector<Node>& nodes, NodeIndex u) {
  std::vector<double> p(nodes.size(), 0.0);
  double total = 0.0;
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    if (static_cast<NodeIndex>(v) == u) continue;
    const double dx = nodes[v].x_km - nodes[u].x_km;
    const double dy = nodes[v].y_km - nodes[u].y_km;
    const double d2 = std::max(dx * dx + dy * dy, 1e-18);
    p[v] = 1.0 / d2;
    total += p[v];
  }
  for (double& x : p) x /= total;
  return p;
}

StreetGraph generate_synthetic(const GenParams& params) {
  if (params.n < 4) throw std::invalid_argument("generate_synthetic: n must be >= 4");
  const auto n = static_cast<std::size_t>(params.n);
  const double side = params.side_km > 0.0 ? params.side_km : 0.25 * std::sqrt(params.n);
  const ElevationField terrain(substream_seed(params.seed, "elevation"));

  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    std::mt19937_64 rng(substream_seed(params.seed, "graph", static_cast<std::uint64_t>(attempt)));
    std::vector<Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
      nodes[i].id = static_cast<std::int64_t>(i);
      nodes[i].x_km = side * uniform01(rng);
      nodes[i].y_km = side * uniform01(rng);
      nodes[i].elevation_m = terrain.at(nodes[i].x_km, nodes[i].y_km);
    }
    std::vector<Street> streets;
    for (std::size_t u = 0; u < n; ++u) {
      const int k = 2 + static_cast<int>(uniform_below(rng, 3));
      const auto prob = neighbor_probabilities(nodes, static_cast<NodeIndex>(u));
      std::vector<double> cumulative(n);
      std::partial_sum(prob.begin(), prob.end(), cumulative.begin());
      for (int draw = 0; draw < k; ++draw) {
        const double r = uniform01(rng) * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        auto v = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
        if (v >= n) v = n - 1;
        // Guard against landing on u through a zero-width interval.
        while (prob[v] == 0.0) v = (v + 1) % n;
        Street s;
        s.id = static_cast<std::int64_t>(streets.size());
        s.u = static_cast<NodeIndex>(u);
        s.v = static_cast<NodeIndex>(v);
        const double dx = nodes[v].x_km - nodes[u].x_km;
        const double dy = nodes[v].y_km - nodes[u].y_km;
        s.length_km = std::max(std::hypot(dx, dy), 1e-6);
        const double rise_m = nodes[v].elevation_m - nodes[u].elevation_m;
        s.gradient_pct = std::clamp(100.0 * rise_m / (1000.0 * s.length_km),
                                    -params.max_gradient_pct, params.max_gradient_pct);
        s.speed_limit_kmh = params.speed_limit_kmh;
        s.capacity = 2;
        streets.push_back(s);
      }
    }
    if (connected(n, streets)) return StreetGraph(std::move(nodes), std::move(streets));
  }
  throw std::runtime_error("generate_synthetic: no connected graph after " +
                           std::to_string(params.max_attempts) + " attempts");
}

OdMatrix sample_od_count(const StreetGraph& g, std::size_t count, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  const std::size_t total = n * (n - 1);
  if (count > total) {
    throw std::invalid_argument("sample_od: more pairs requested than n(n-1)");
  }
  std::vector<std::uint32_t> ids(total);
  for (std::size_t i = 0; i < total; ++i) ids[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_below(rng, total - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  OdMatrix od;
  od.pairs.reserve(count);
  for (std::uint32_t id : ids) {
    const auto s = static_cast<NodeIndex>(id / (n - 1));
    auto t = static_cast<NodeIndex>(id % (n - 1));
    if (t >= s) ++t;
    od.pairs.push_back(OdPair{s, t, 1.0, 1.0, 1, false});
  }
  return od;
}

OdMatrix sample_od(const StreetGraph& g, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("sample_od: fraction must lie in (0, 1]");
  }
  const std::size_t n = g.num_nodes();
  const std::size_t total = n * (n - 1);
  auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n * n)));
  if (fraction == 1.0) count = total;
  if (count == 0) throw std::invalid_argument("sample_od: fraction * n^2 < 1");
  if (count > total) throw std::invalid_argument("sample_od: fraction * n^2 exceeds n(n-1)");
  return sample_od_count(g, count, seed);
}

OdMatrix all_pairs_od(const StreetGraph& g) {
  OdMatrix od;
  const auto n = static_cast<NodeIndex>(g.num_nodes());
  for (NodeIndex s = 0; s < n; ++s) {
    for (NodeIndex t = 0; t < n; ++t) {
      if (s != t) od.pairs.push_back(OdPair{s, t, 1.0, 1.0, 1, false});
    }
  }
  return od;
}

OdMatrix extend_with_aux(const OdMatrix& od, const StreetGraph& g, std::uint64_t seed) {
  const std::size_t n = g.num_nodes();
  std::vector<NodeIndex> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeIndex>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_below(rng, i)]);
  }
  OdMatrix out = od;
  for (std::size_t i = 0; i < n; ++i) {
    out.pairs.push_back(OdPair{order[i], order[(i + 1) % n], 0.0, 0.0, 1, true});
  }
  return out;
}

}  // namespace lanealloc
