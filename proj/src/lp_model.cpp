#include "lanealloc/lp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lanealloc/paths.hpp"

namespace lanealloc {

void LpInstance::add_row(const std::vector<int>& cols, const std::vector<double>& values,
                         RowSense s, double b) {
  if (cols.size() != values.size()) throw std::invalid_argument("add_row: size mismatch");
  row_cols.insert(row_cols.end(), cols.begin(), cols.end());
  row_values.insert(row_values.end(), values.begin(), values.end());
  row_start.push_back(row_cols.size());
  sense.push_back(s);
  rhs.push_back(b);
}

std::string lp_to_triplets(const LpInstance& lp) {
  std::ostringstream out;
  out.precision(17);
  out << "lp " << lp.num_rows() << ' ' << lp.num_cols << ' ' << lp.num_nonzeros() << '\n';
  out << "objective\n";
  for (std::size_t j = 0; j < lp.num_cols; ++j) {
    if (lp.objective[j] != 0.0) out << j << ' ' << lp.objective[j] << '\n';
  }
  out << "bounds\n";
  for (std::size_t j = 0; j < lp.num_cols; ++j) {
    if (lp.col_lower[j] != 0.0 || std::isfinite(lp.col_upper[j])) {
      out << j << ' ' << lp.col_lower[j] << ' ';
      if (std::isfinite(lp.col_upper[j])) {
        out << lp.col_upper[j];
      } else {
        out << "inf";
      }
      out << '\n';
    }
  }
  out << "rows\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    out << i << ' ' << (lp.sense[i] == RowSense::kEqual ? "E" : "L") << ' ' << lp.rhs[i] << '\n';
  }
  out << "matrix\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    for (std::size_t k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
      out << i << ' ' << lp.row_cols[k] << ' ' << lp.row_values[k] << '\n';
    }
  }
  out << "end\n";
  return out.str();
}

LpInstance lp_from_triplets(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::size_t rows = 0, cols = 0, nnz = 0;
  if (!(in >> tag >> rows >> cols >> nnz) || tag != "lp") {
    throw std::invalid_argument("triplets: bad header");
  }
  LpInstance lp;
  lp.num_cols = cols;
  lp.objective.assign(cols, 0.0);
  lp.col_lower.assign(cols, 0.0);
  lp.col_upper.assign(cols, std::numeric_limits<double>::infinity());
  std::vector<RowSense> sense(rows, RowSense::kEqual);
  std::vector<double> rhs(rows, 0.0);
  std::vector<std::vector<std::pair<int, double>>> entries(rows);

  auto expect = [&](const char* section) {
    if (!(in >> tag) || tag != section) {
      throw std::invalid_argument(std::string("triplets: expected section ") + section);
    }
  };
  auto column = [&](long long j) {
    if (j < 0 || static_cast<std::size_t>(j) >= cols) {
      throw std::invalid_argument("triplets: column out of range");
    }
    return static_cast<std::size_t>(j);
  };
  expect("objective");
  while (in >> tag && tag != "bounds") {
    double c;
    in >> c;
    lp.objective[column(std::stoll(tag))] = c;
  }
  while (in >> tag && tag != "rows") {
    std::string lo, up;
    in >> lo >> up;
    const std::size_t j = column(std::stoll(tag));
    lp.col_lower[j] = std::stod(lo);
    lp.col_upper[j] = up == "inf" ? std::numeric_limits<double>::infinity() : std::stod(up);
  }
  while (in >> tag && tag != "matrix") {
    std::string s;
    double b;
    in >> s >> b;
    const auto i = std::stoull(tag);
    if (i >= rows) throw std::invalid_argument("triplets: row out of range");
    sense[i] = s == "E" ? RowSense::kEqual : RowSense::kLessEqual;
    rhs[i] = b;
  }
  while (in >> tag && tag != "end") {
    long long j;
    double v;
    in >> j >> v;
    const auto i = std::stoull(tag);
    if (i >= rows) throw std::invalid_argument("triplets: row out of range");
    entries[i].emplace_back(static_cast<int>(column(j)), v);
  }
  if (tag != "end") throw std::invalid_argument("triplets: missing end marker");
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<int> c;
    std::vector<double> v;
    for (auto [j, x] : entries[i]) {
      c.push_back(j);
      v.push_back(x);
    }
    lp.add_row(c, v, sense[i], rhs[i]);
  }
  return lp;
}

VarIndex::VarIndex(std::size_t num_arcs, std::vector<std::vector<ArcId>> arcs_per_pair,
                   std::vector<bool> full_pair)
    : num_arcs_(num_arcs), arcs_(std::move(arcs_per_pair)), full_(std::move(full_pair)) {
  pair_offset_.reserve(arcs_.size() + 1);
  for (const auto& arcs : arcs_) pair_offset_.push_back(pair_offset_.back() + 3 * arcs.size());
}

std::optional<int> VarIndex::flow_column(std::size_t pair, ArcId arc, FlowKind kind) const {
  const auto& arcs = arcs_[pair];
  std::size_t pos;
  if (full_[pair]) {
    pos = static_cast<std::size_t>(arc);
  } else {
    auto it = std::lower_bound(arcs.begin(), arcs.end(), arc);
    if (it == arcs.end() || *it != arc) return std::nullopt;
    pos = static_cast<std::size_t>(it - arcs.begin());
  }
  return static_cast<int>(pair_offset_[pair] + 3 * pos + static_cast<std::size_t>(kind));
}

int VarIndex::cap_column(ArcId arc, CapKind kind) const {
  return static_cast<int>(flow_vars() + 2 * static_cast<std::size_t>(arc) +
                          static_cast<std::size_t>(kind));
}

bool VarIndex::is_flow(int column) const {
  return static_cast<std::size_t>(column) < flow_vars();
}

VarIndex::FlowVar VarIndex::flow_var(int column) const {
  const auto c = static_cast<std::size_t>(column);
  auto it = std::upper_bound(pair_offset_.begin(), pair_offset_.end(), c);
  const auto pair = static_cast<std::size_t>(it - pair_offset_.begin()) - 1;
  const std::size_t local = c - pair_offset_[pair];
  return {pair, arcs_[pair][local / 3], static_cast<FlowKind>(local % 3)};
}

VarIndex::CapVar VarIndex::cap_var(int column) const {
  const std::size_t local = static_cast<std::size_t>(column) - flow_vars();
  return {static_cast<ArcId>(local / 2), static_cast<CapKind>(local % 2)};
}

const std::vector<ArcId>& VarIndex::pair_arcs(std::size_t pair) const { return arcs_[pair]; }

Dimensions dimensions(const VarIndex& idx, const LpInstance& lp) {
  return {idx.columns(), lp.num_rows(), idx.flow_vars(), idx.cap_vars()};
}

std::vector<FixedViolation> check_fixed(const FixedSet& fixed, const StreetGraph& g) {
  std::vector<FixedViolation> out;
  std::map<StreetIndex, int> seen;
  for (const auto& f : fixed) {
    auto s = g.find_street(f.edge_id);
    if (!s) {
      out.push_back({f.edge_id, "unknown edge_id"});
      continue;
    }
    const int cap = g.street(*s).capacity;
    if (++seen[*s] > 1) {
      out.push_back({f.edge_id, "more than one fixed entry for this street"});
      continue;
    }
    if (f.value < 0) {
      out.push_back({f.edge_id, "negative fixed value"});
    } else if (f.mode == LaneMode::kBike && f.value > cap) {
      // A bidirectional bike lane of value v uses 0.5 * (v + v) lane units.
      out.push_back({f.edge_id, "bike lanes exceed street capacity " + std::to_string(cap)});
    } else if (f.mode == LaneMode::kCar && f.value > cap) {
      out.push_back({f.edge_id, "car lanes exceed street capacity " + std::to_string(cap)});
    }
  }
  return out;
}

void validate_fixed(const FixedSet& fixed, const StreetGraph& g) {
  auto violations = check_fixed(fixed, g);
  if (!violations.empty()) {
    throw InvalidInstance("fixed lane on edge " + std::to_string(violations.front().edge_id) +
                          ": " + violations.front().reason);
  }
}

LpModel build_lp(const LaneDigraph& dg, const OdMatrix& od, const ModelOptions& options) {
  const StreetGraph& g = dg.streets();
  if (!(options.gamma >= 0.0) || !std::isfinite(options.gamma)) {
    throw std::invalid_argument("build_lp: gamma must be finite and >= 0");
  }
  if (options.eta && *options.eta < 1) throw std::invalid_argument("build_lp: eta must be >= 1");
  validate_od(od, g.num_nodes());
  validate_fixed(options.fixed, g);

  const std::size_t m = dg.num_arcs();
  const std::size_t n = dg.num_nodes();
  const std::size_t num_pairs = od.pairs.size();

  std::vector<std::vector<ArcId>> arcs_per_pair(num_pairs);
  std::vector<bool> full(num_pairs, true);
  std::vector<ArcId> all_arcs(m);
  for (std::size_t a = 0; a < m; ++a) all_arcs[a] = static_cast<ArcId>(a);
  std::optional<NearestNodes> near;
  if (options.eta && static_cast<std::size_t>(*options.eta) < n) near.emplace(g);
  for (std::size_t p = 0; p < num_pairs; ++p) {
    const OdPair& pair = od.pairs[p];
    if (near && !pair.is_aux) {
      arcs_per_pair[p] = eta_subgraph(dg, *near, pair.s, pair.t, *options.eta);
      full[p] = arcs_per_pair[p].size() == m;
    } else {
      arcs_per_pair[p] = all_arcs;
    }
  }

  LpModel model;
  model.index = VarIndex(m, std::move(arcs_per_pair), std::move(full));
  const VarIndex& idx = model.index;
  LpInstance& lp = model.lp;
  lp.num_cols = idx.columns();
  lp.objective.assign(lp.num_cols, 0.0);
  lp.col_lower.assign(lp.num_cols, 0.0);
  lp.col_upper.assign(lp.num_cols, std::numeric_limits<double>::infinity());

  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<char> member(m, 0);
  std::vector<char> node_used(n, 0);
  for (std::size_t p = 0; p < num_pairs; ++p) {
    const OdPair& pair = od.pairs[p];
    const auto& arcs = idx.pair_arcs(p);
    for (ArcId a : arcs) {
      const Arc& arc = dg.arc(a);
      lp.objective[*idx.flow_column(p, a, FlowKind::kCar)] =
          options.gamma * pair.weight_car * arc.t_car;
      lp.objective[*idx.flow_column(p, a, FlowKind::kBike)] = pair.weight_bike * arc.t_bike;
      lp.objective[*idx.flow_column(p, a, FlowKind::kShared)] = pair.weight_bike * arc.t_shared;
      member[a] = 1;
      node_used[arc.tail] = node_used[arc.head] = 1;
    }
    node_used[pair.s] = node_used[pair.t] = 1;

    const auto phi = static_cast<double>(pair.flow);
    auto balance = [&](NodeIndex v) {
      return v == pair.s ? phi : (v == pair.t ? -phi : 0.0);
    };
    // Car conservation, then combined bike + shared conservation.
    for (int mode = 0; mode < 2; ++mode) {
      for (std::size_t v = 0; v < n; ++v) {
        if (!node_used[v]) continue;
        cols.clear();
        vals.clear();
        auto emit = [&](ArcId a, double sign) {
          if (!member[a]) return;
          if (mode == 0) {
            cols.push_back(*idx.flow_column(p, a, FlowKind::kCar));
            vals.push_back(sign);
          } else {
            cols.push_back(*idx.flow_column(p, a, FlowKind::kBike));
            vals.push_back(sign);
            cols.push_back(*idx.flow_column(p, a, FlowKind::kShared));
            vals.push_back(sign);
          }
        };
        for (ArcId a : dg.out_arcs(static_cast<NodeIndex>(v))) emit(a, 1.0);
        for (ArcId a : dg.in_arcs(static_cast<NodeIndex>(v))) emit(a, -1.0);
        lp.add_row(cols, vals, RowSense::kEqual, balance(static_cast<NodeIndex>(v)));
      }
    }
    // Per-pair coupling with the arc capacities. Shared flow is uncapped.
    for (ArcId a : arcs) {
      lp.add_row({*idx.flow_column(p, a, FlowKind::kCar), idx.cap_column(a, CapKind::kCar)},
                 {1.0, -1.0}, RowSense::kLessEqual, 0.0);
      lp.add_row({*idx.flow_column(p, a, FlowKind::kBike), idx.cap_column(a, CapKind::kBike)},
                 {1.0, -1.0}, RowSense::kLessEqual, 0.0);
    }
    for (ArcId a : arcs) {
      member[a] = 0;
      node_used[dg.arc(a).tail] = node_used[dg.arc(a).head] = 0;
    }
    node_used[pair.s] = node_used[pair.t] = 0;
  }

  for (std::size_t s = 0; s < g.num_streets(); ++s) {
    const ArcId fwd = LaneDigraph::forward_arc(static_cast<StreetIndex>(s));
    const ArcId bwd = LaneDigraph::backward_arc(static_cast<StreetIndex>(s));
    lp.add_row({idx.cap_column(fwd, CapKind::kCar), idx.cap_column(bwd, CapKind::kCar),
                idx.cap_column(fwd, CapKind::kBike), idx.cap_column(bwd, CapKind::kBike)},
               {1.0, 1.0, 0.5, 0.5}, RowSense::kLessEqual,
               static_cast<double>(g.street(static_cast<StreetIndex>(s)).capacity));
  }
  if (options.bidirectional_bike) {
    for (std::size_t s = 0; s < g.num_streets(); ++s) {
      const ArcId fwd = LaneDigraph::forward_arc(static_cast<StreetIndex>(s));
      const ArcId bwd = LaneDigraph::backward_arc(static_cast<StreetIndex>(s));
      lp.add_row({idx.cap_column(fwd, CapKind::kBike), idx.cap_column(bwd, CapKind::kBike)},
                 {1.0, -1.0}, RowSense::kEqual, 0.0);
    }
  }

  for (const FixedLane& f : options.fixed) {
    const StreetIndex s = *g.find_street(f.edge_id);
    const double bike = f.mode == LaneMode::kBike ? static_cast<double>(f.value) : 0.0;
    for (ArcId a : {LaneDigraph::forward_arc(s), LaneDigraph::backward_arc(s)}) {
      const int col = idx.cap_column(a, CapKind::kBike);
      lp.col_lower[col] = lp.col_upper[col] = bike;
    }
  }
  return model;
}

Capacities extract_capacities(const VarIndex& idx, const std::vector<double>& values) {
  Capacities caps;
  caps.car.resize(idx.num_arcs());
  caps.bike.resize(idx.num_arcs());
  for (std::size_t a = 0; a < idx.num_arcs(); ++a) {
    caps.car[a] = values[idx.cap_column(static_cast<ArcId>(a), CapKind::kCar)];
    caps.bike[a] = values[idx.cap_column(static_cast<ArcId>(a), CapKind::kBike)];
  }
  return caps;
}

void pin_capacities(LpInstance& lp, const VarIndex& idx, const Capacities& caps) {
  for (std::size_t a = 0; a < idx.num_arcs(); ++a) {
    const int c = idx.cap_column(static_cast<ArcId>(a), CapKind::kCar);
    const int b = idx.cap_column(static_cast<ArcId>(a), CapKind::kBike);
    lp.col_lower[c] = lp.col_upper[c] = std::max(0.0, caps.car[a]);
    lp.col_lower[b] = lp.col_upper[b] = std::max(0.0, caps.bike[a]);
  }
}

}  // namespace lanealloc
