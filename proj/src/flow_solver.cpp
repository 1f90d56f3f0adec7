#include "lanealloc/flow_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "Highs.h"

namespace lanealloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxRounds = 20000;
// Paths entering the master per pricing round. Small batches keep each
// re-solve short.
constexpr std::size_t kColumnsPerRound = 75;
constexpr HighsInt kDualStrategy = 1;
constexpr HighsInt kPrimalStrategy = 4;

struct Step {
  ArcId arc;
  FlowKind kind;
};

struct PathColumn {
  std::size_t pair;
  std::vector<Step> steps;
};

// Coupling between one pair's flow on an arc and the arc capacity.
struct Coupling {
  HighsInt row = -1;           // -1 while the row is not in the master
  std::vector<HighsInt> cols;  // paths using the arc in this mode
};

}  // namespace

class FlowLpSession::Impl {
 public:
  Impl(const LaneDigraph& dg, const OdMatrix& od, const LpModel& model,
       const SolveOptions& options)
      : dg_(dg), od_(od), model_(model), idx_(model.index), options_(options) {
    if (idx_.num_pairs() != od.pairs.size() || idx_.num_arcs() != dg.num_arcs()) {
      throw std::invalid_argument("FlowLpSession: model does not match instance");
    }
    highs_.setOptionValue("output_flag", false);
    highs_.setOptionValue("threads", 1);
    highs_.setOptionValue("random_seed", 0);
    highs_.setOptionValue("solver", "simplex");
    highs_.setOptionValue("presolve", "off");
    highs_.setOptionValue("primal_feasibility_tolerance", options.feasibility_tolerance);
    highs_.setOptionValue("dual_feasibility_tolerance", options.optimality_tolerance);

    const std::size_t num_arcs = idx_.num_arcs();
    const std::size_t first_cap = idx_.flow_vars();
    cap_lower_.assign(model.lp.col_lower.begin() + first_cap, model.lp.col_lower.end());
    cap_upper_.assign(model.lp.col_upper.begin() + first_cap, model.lp.col_upper.end());
    pinned_.assign(2 * num_arcs, false);

    // Capacity columns keep their model order at the front of the master,
    // followed by the rows of the model that involve capacities only.
    HighsLp h;
    h.num_col_ = static_cast<HighsInt>(2 * num_arcs);
    h.col_cost_.assign(2 * num_arcs, 0.0);
    h.col_lower_ = cap_lower_;
    h.col_upper_.resize(2 * num_arcs);
    for (std::size_t c = 0; c < 2 * num_arcs; ++c) {
      h.col_upper_[c] = std::isinf(cap_upper_[c]) ? kHighsInf : cap_upper_[c];
    }
    h.a_matrix_.format_ = MatrixFormat::kRowwise;
    h.a_matrix_.start_.assign(1, 0);
    const LpInstance& lp = model.lp;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
      bool caps_only = true;
      for (std::size_t k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
        if (static_cast<std::size_t>(lp.row_cols[k]) < first_cap) {
          caps_only = false;
          break;
        }
      }
      if (!caps_only) continue;
      for (std::size_t k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
        h.a_matrix_.index_.push_back(static_cast<HighsInt>(lp.row_cols[k] - first_cap));
        h.a_matrix_.value_.push_back(lp.row_values[k]);
      }
      h.a_matrix_.start_.push_back(static_cast<HighsInt>(h.a_matrix_.index_.size()));
      h.row_upper_.push_back(lp.rhs[i]);
      h.row_lower_.push_back(lp.sense[i] == RowSense::kEqual ? lp.rhs[i] : -kHighsInf);
    }
    // Convexity rows: car then bike for each pair.
    const std::size_t num_pairs = od.pairs.size();
    convexity_row_ = static_cast<HighsInt>(h.row_upper_.size());
    for (std::size_t p = 0; p < num_pairs; ++p) {
      const auto phi = static_cast<double>(od.pairs[p].flow);
      for (int mode = 0; mode < 2; ++mode) {
        h.row_upper_.push_back(phi);
        h.row_lower_.push_back(phi);
        h.a_matrix_.start_.push_back(static_cast<HighsInt>(h.a_matrix_.index_.size()));
      }
    }
    h.num_row_ = static_cast<HighsInt>(h.row_upper_.size());
    h.a_matrix_.num_col_ = h.num_col_;
    h.a_matrix_.num_row_ = h.num_row_;
    h.sense_ = ObjSense::kMinimize;
    highs_.passModel(std::move(h));
    path_of_col_.assign(2 * num_arcs, -1);

    // Car slack per pair, priced above any path so that it only carries flow
    // when the pair cannot be routed.
    double total = 0.0;
    for (std::size_t p = 0; p < num_pairs; ++p) {
      double worst = 0.0;
      for (ArcId a : idx_.pair_arcs(p)) {
        worst += std::max({cost(p, a, FlowKind::kCar), cost(p, a, FlowKind::kShared)});
      }
      total += static_cast<double>(od.pairs[p].flow) * worst;
    }
    const double big = 10.0 * (1.0 + total);
    std::vector<double> slack_cost(num_pairs, big);
    std::vector<double> slack_lower(num_pairs, 0.0);
    std::vector<double> slack_upper(num_pairs, kHighsInf);
    std::vector<HighsInt> starts(num_pairs);
    std::vector<HighsInt> rows(num_pairs);
    std::vector<double> ones(num_pairs, 1.0);
    for (std::size_t p = 0; p < num_pairs; ++p) {
      starts[p] = static_cast<HighsInt>(p);
      rows[p] = car_row(p);
      slack_cols_.push_back(static_cast<HighsInt>(path_of_col_.size()));
      path_of_col_.push_back(-1);
    }
    if (num_pairs > 0) {
      highs_.addCols(static_cast<HighsInt>(num_pairs), slack_cost.data(), slack_lower.data(),
                     slack_upper.data(), static_cast<HighsInt>(num_pairs), starts.data(),
                     rows.data(), ones.data());
    }

    allowed_.assign(num_arcs, 0);
    seed_paths();
  }

  void pin(int column, double value) {
    const std::size_t first_cap = idx_.flow_vars();
    if (column < 0 || static_cast<std::size_t>(column) < first_cap ||
        static_cast<std::size_t>(column) >= idx_.columns()) {
      throw std::invalid_argument("FlowLpSession::pin: not a capacity column");
    }
    const std::size_t c = column - first_cap;
    cap_lower_[c] = cap_upper_[c] = value;
    pinned_[c] = true;
    highs_.changeColBounds(static_cast<HighsInt>(c), value, value);
    strategy_ = kDualStrategy;
  }

  LpSolution solve() {
    std::int64_t iterations = 0;
    int rounds = 0;
    for (;;) {
      ++rounds;
      highs_.setOptionValue("simplex_strategy", strategy_);
      highs_.run();
      iterations += highs_.getInfo().simplex_iteration_count;
      if (highs_.getModelStatus() != HighsModelStatus::kOptimal || rounds > kMaxRounds) {
        return fallback(iterations, rounds);
      }
      // Rows cut off the current point: the basis stays dual feasible.
      if (separate() > 0) {
        strategy_ = kDualStrategy;
        continue;
      }
      // New columns keep the point feasible.
      if (price() > 0) {
        strategy_ = kPrimalStrategy;
        continue;
      }
      const std::vector<double>& x = highs_.getSolution().col_value;
      for (HighsInt c : slack_cols_) {
        if (x[c] > options_.feasibility_tolerance) return fallback(iterations, rounds);
      }
      break;
    }
    LpSolution sol = expand();
    sol.iterations = iterations;
    sol.rounds = rounds;
    return sol;
  }

 private:
  double cost(std::size_t p, ArcId a, FlowKind kind) const {
    return model_.lp.objective[*idx_.flow_column(p, a, kind)];
  }
  HighsInt car_row(std::size_t p) const { return convexity_row_ + static_cast<HighsInt>(2 * p); }
  HighsInt bike_row(std::size_t p) const { return car_row(p) + 1; }

  std::uint64_t key(std::size_t p, ArcId a, FlowKind kind) const {
    return (static_cast<std::uint64_t>(p) * idx_.num_arcs() + static_cast<std::uint64_t>(a)) *
               2 +
           (kind == FlowKind::kCar ? 0 : 1);
  }
  HighsInt cap_of(std::uint64_t k) const {
    const auto arc = static_cast<ArcId>((k / 2) % idx_.num_arcs());
    const CapKind kind = k % 2 == 0 ? CapKind::kCar : CapKind::kBike;
    return static_cast<HighsInt>(idx_.cap_column(arc, kind) - idx_.flow_vars());
  }

  void mark_allowed(std::size_t p, char on) {
    for (ArcId a : idx_.pair_arcs(p)) allowed_[a] = on;
  }

  // Dijkstra over the arcs of pair p. `arc_cost` returns the cost and the
  // chosen flow kind for an arc.
  template <typename ArcCost>
  std::optional<std::pair<double, std::vector<Step>>> cheapest(std::size_t p,
                                                               ArcCost arc_cost) {
    const std::size_t n = dg_.num_nodes();
    dist_.assign(n, kInf);
    via_.assign(n, Step{-1, FlowKind::kCar});
    done_.assign(n, 0);
    const NodeIndex s = od_.pairs[p].s;
    const NodeIndex t = od_.pairs[p].t;
    using Entry = std::pair<double, NodeIndex>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    dist_[s] = 0.0;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (done_[v]) continue;
      done_[v] = 1;
      if (v == t) break;
      for (ArcId a : dg_.out_arcs(v)) {
        if (!allowed_[a]) continue;
        const auto [c, kind] = arc_cost(a);
        const NodeIndex w = dg_.arc(a).head;
        if (d + c < dist_[w]) {
          dist_[w] = d + c;
          via_[w] = Step{a, kind};
          heap.emplace(dist_[w], w);
        }
      }
    }
    if (std::isinf(dist_[t])) return std::nullopt;
    std::vector<Step> steps;
    for (NodeIndex v = t; v != s; v = dg_.arc(via_[v].arc).tail) steps.push_back(via_[v]);
    std::reverse(steps.begin(), steps.end());
    return std::make_pair(dist_[t], std::move(steps));
  }

  void seed_paths() {
    std::vector<PathColumn> fresh;
    for (std::size_t p = 0; p < od_.pairs.size(); ++p) {
      mark_allowed(p, 1);
      auto car = cheapest(p, [&](ArcId a) {
        return std::make_pair(dg_.arc(a).t_car, FlowKind::kCar);
      });
      if (car) fresh.push_back({p, std::move(car->second)});
      auto bike = cheapest(p, [&](ArcId a) {
        return std::make_pair(dg_.arc(a).t_bike, FlowKind::kShared);
      });
      mark_allowed(p, 0);
      if (!bike) throw InvalidInstance("demand pair has no path in its arc set");
      PathColumn lane{p, bike->second};
      for (Step& st : lane.steps) st.kind = FlowKind::kBike;
      fresh.push_back(std::move(lane));
      fresh.push_back({p, std::move(bike->second)});
    }
    add_paths(fresh);
  }

  // Adds the coupling rows violated by the current point; returns how many.
  std::size_t separate() {
    const std::vector<double>& x = highs_.getSolution().col_value;
    std::vector<std::uint64_t> violated;
    for (auto& [k, coupling] : couplings_) {
      if (coupling.row >= 0) continue;
      double load = 0.0;
      for (HighsInt c : coupling.cols) load += x[c];
      if (load > x[cap_of(k)] + options_.feasibility_tolerance) violated.push_back(k);
    }
    if (violated.empty()) return 0;
    std::sort(violated.begin(), violated.end());
    std::vector<double> lower(violated.size(), -kHighsInf);
    std::vector<double> upper(violated.size(), 0.0);
    std::vector<HighsInt> starts;
    std::vector<HighsInt> index;
    std::vector<double> values;
    HighsInt next_row = highs_.getNumRow();
    for (std::uint64_t k : violated) {
      Coupling& coupling = couplings_.at(k);
      coupling.row = next_row++;
      starts.push_back(static_cast<HighsInt>(index.size()));
      index.push_back(cap_of(k));
      values.push_back(-1.0);
      for (HighsInt c : coupling.cols) {
        index.push_back(c);
        values.push_back(1.0);
      }
    }
    highs_.addRows(static_cast<HighsInt>(violated.size()), lower.data(), upper.data(),
                   static_cast<HighsInt>(index.size()), starts.data(), index.data(),
                   values.data());
    return violated.size();
  }

  // Adds negatively priced paths; returns how many.
  std::size_t price() {
    const std::vector<double>& row_dual = highs_.getSolution().row_dual;
    std::vector<PathColumn> fresh;
    for (std::size_t p = 0; p < od_.pairs.size(); ++p) {
      mark_allowed(p, 1);
      const auto coupling_dual = [&](ArcId a, FlowKind kind) {
        const auto it = couplings_.find(key(p, a, kind));
        if (it == couplings_.end() || it->second.row < 0) return 0.0;
        return std::max(0.0, -row_dual[it->second.row]);
      };
      const double car_sigma = row_dual[car_row(p)];
      auto car = cheapest(p, [&](ArcId a) {
        return std::make_pair(cost(p, a, FlowKind::kCar) + coupling_dual(a, FlowKind::kCar),
                              FlowKind::kCar);
      });
      if (car && car->first - car_sigma < -tolerance(car_sigma)) {
        fresh.push_back({p, std::move(car->second)});
        fresh_rc_.push_back(car->first - car_sigma);
      }
      const double bike_sigma = row_dual[bike_row(p)];
      auto bike = cheapest(p, [&](ArcId a) {
        const double on_lane = cost(p, a, FlowKind::kBike) + coupling_dual(a, FlowKind::kBike);
        const double shared = cost(p, a, FlowKind::kShared);
        return on_lane < shared ? std::make_pair(on_lane, FlowKind::kBike)
                                : std::make_pair(shared, FlowKind::kShared);
      });
      if (bike && bike->first - bike_sigma < -tolerance(bike_sigma)) {
        fresh.push_back({p, std::move(bike->second)});
        fresh_rc_.push_back(bike->first - bike_sigma);
      }
      mark_allowed(p, 0);
    }
    if (fresh.size() > kColumnsPerRound) {
      // Most negative first; the candidate index breaks ties.
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t i = 0; i < fresh.size(); ++i) order.emplace_back(fresh_rc_[i], i);
      std::sort(order.begin(), order.end());
      order.resize(kColumnsPerRound);
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
      std::vector<PathColumn> keep;
      for (const auto& o : order) keep.push_back(std::move(fresh[o.second]));
      fresh = std::move(keep);
    }
    fresh_rc_.clear();
    add_paths(fresh);
    return fresh.size();
  }

  double tolerance(double scale) const {
    return options_.optimality_tolerance * std::max(1.0, std::abs(scale));
  }

  void add_paths(std::vector<PathColumn>& fresh) {
    std::erase_if(fresh, [&](const PathColumn& path) {
      std::vector<std::int64_t> sig{static_cast<std::int64_t>(path.pair)};
      for (const Step& st : path.steps) sig.push_back(3 * st.arc + static_cast<int>(st.kind));
      return !known_.insert(std::move(sig)).second;
    });
    if (fresh.empty()) return;

    std::vector<double> col_cost;
    std::vector<double> col_lower(fresh.size(), 0.0);
    std::vector<double> col_upper(fresh.size(), kHighsInf);
    std::vector<HighsInt> starts;
    std::vector<HighsInt> index;
    std::vector<double> values;
    for (PathColumn& path : fresh) {
      const auto col = static_cast<HighsInt>(path_of_col_.size());
      double c = 0.0;
      starts.push_back(static_cast<HighsInt>(index.size()));
      const bool car = path.steps.front().kind == FlowKind::kCar;
      index.push_back(car ? car_row(path.pair) : bike_row(path.pair));
      values.push_back(1.0);
      for (const Step& st : path.steps) {
        c += cost(path.pair, st.arc, st.kind);
        if (st.kind == FlowKind::kShared) continue;
        Coupling& coupling = couplings_[key(path.pair, st.arc, st.kind)];
        coupling.cols.push_back(col);
        if (coupling.row >= 0) {
          index.push_back(coupling.row);
          values.push_back(1.0);
        }
      }
      col_cost.push_back(c);
      path_of_col_.push_back(static_cast<int>(paths_.size()));
      paths_.push_back(std::move(path));
    }
    highs_.addCols(static_cast<HighsInt>(fresh.size()), col_cost.data(), col_lower.data(),
                   col_upper.data(), static_cast<HighsInt>(index.size()), starts.data(),
                   index.data(), values.data());
  }

  LpSolution expand() const {
    LpSolution sol;
    sol.status = SolveStatus::kOptimal;
    const std::vector<double>& x = highs_.getSolution().col_value;
    sol.values.assign(idx_.columns(), 0.0);
    const std::size_t first_cap = idx_.flow_vars();
    for (std::size_t c = 0; c < 2 * idx_.num_arcs(); ++c) {
      sol.values[first_cap + c] = pinned_[c] ? cap_lower_[c] : x[c];
    }
    for (std::size_t c = 0; c < path_of_col_.size(); ++c) {
      if (path_of_col_[c] < 0 || x[c] <= 0.0) continue;
      const PathColumn& path = paths_[path_of_col_[c]];
      for (const Step& st : path.steps) {
        sol.values[*idx_.flow_column(path.pair, st.arc, st.kind)] += x[c];
      }
    }
    for (double& v : sol.values) {
      if (v < 0.0 && v > -1e-9) v = 0.0;
    }
    for (std::size_t j = 0; j < sol.values.size(); ++j) {
      sol.objective += model_.lp.objective[j] * sol.values[j];
    }
    sol.max_residual = primal_residual(model_.lp, sol.values);
    for (std::size_t c = 0; c < cap_lower_.size(); ++c) {
      const double v = sol.values[first_cap + c];
      sol.max_residual = std::max({sol.max_residual, cap_lower_[c] - v, v - cap_upper_[c]});
    }
    return sol;
  }

  // Infeasible or numerically stuck: hand the arc formulation to the
  // general solver with the same pins.
  LpSolution fallback(std::int64_t iterations, int rounds) const {
    std::map<int, double> pins;
    for (std::size_t c = 0; c < pinned_.size(); ++c) {
      if (pinned_[c]) pins[static_cast<int>(idx_.flow_vars() + c)] = cap_lower_[c];
    }
    LpSolution sol = resolve_with_bounds(model_.lp, pins, options_);
    sol.iterations += iterations;
    sol.rounds += rounds;
    return sol;
  }

  const LaneDigraph& dg_;
  const OdMatrix& od_;
  const LpModel& model_;
  const VarIndex& idx_;
  SolveOptions options_;
  Highs highs_;
  HighsInt strategy_ = kDualStrategy;

  std::vector<double> cap_lower_;
  std::vector<double> cap_upper_;
  std::vector<bool> pinned_;

  HighsInt convexity_row_ = 0;
  std::vector<HighsInt> slack_cols_;
  std::vector<int> path_of_col_;  // master column -> path, -1 otherwise
  std::vector<PathColumn> paths_;
  std::unordered_map<std::uint64_t, Coupling> couplings_;
  std::set<std::vector<std::int64_t>> known_;

  std::vector<double> fresh_rc_;
  std::vector<char> allowed_;
  std::vector<double> dist_;
  std::vector<Step> via_;
  std::vector<char> done_;
};

FlowLpSession::FlowLpSession(const LaneDigraph& dg, const OdMatrix& od, const LpModel& model,
                             const SolveOptions& options)
    : impl_(std::make_unique<Impl>(dg, od, model, options)) {}

FlowLpSession::~FlowLpSession() = default;

void FlowLpSession::pin(int column, double value) { impl_->pin(column, value); }

LpSolution FlowLpSession::solve() { return impl_->solve(); }

LpSolution solve_flow_lp(const LaneDigraph& dg, const OdMatrix& od, const LpModel& model,
                         const SolveOptions& options) {
  FlowLpSession session(dg, od, model, options);
  return session.solve();
}

}  // namespace lanealloc
