#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lanealloc/design.hpp"
#include "lanealloc/evaluation.hpp"
#include "lanealloc/lp_model.hpp"
#include "lanealloc/lp_solver.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

/// The LP could not be solved to optimality.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised from inside a run when the progress callback asks to stop.
class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("cancelled") {}
};

struct RoundingProgress {
  double gamma = 0.0;
  int iteration = 0;
  int streets_fixed = 0;
  int total_streets = 0;
};

struct RunStats {
  int lp_solves = 0;
  std::int64_t simplex_iterations = 0;
  double init_seconds = 0.0;  // model construction
  double solve_seconds = 0.0;
  // Objective of the first (unrounded) LP of each run.
  std::vector<double> relaxed_objective;
};

struct RoundingOptions {
  std::optional<int> eta;
  // Called after every LP solve. Returning false cancels the run.
  std::function<bool(const RoundingProgress&)> progress;
  RunStats* stats = nullptr;
};

/// Iterative LP rounding. Each LP solve is followed by fixing up to k more
/// streets, in order of decreasing fractional bike capacity (ties by edge
/// id): as a bike lane when the car network can still be oriented strongly
/// connected, otherwise as car-only. Every batch yields one design.
std::vector<NetworkDesign> round_and_refix(const LaneDigraph& dg, const OdMatrix& od,
                                           double gamma, int k, const FixedSet& fixed0 = {},
                                           const RoundingOptions& options = {});

/// Evaluated designs of a whole run, before dominance filtering.
struct RunResult {
  std::vector<NetworkDesign> designs;
  std::vector<ParetoPoint> points;  // points[i] evaluates designs[i]
  std::vector<ParetoPoint> frontier;
  DesignTimes reference;
};

/// round_and_refix for every gamma, evaluated against the all-car reference
/// and pooled into one frontier.
RunResult pareto_run(const LaneDigraph& dg, const OdMatrix& od, const std::vector<double>& gammas,
                     int k, const FixedSet& fixed0 = {}, const RoundingOptions& options = {});

/// The LP relaxation without rounding.
struct RelaxedSolution {
  LpSolution solution;
  Capacities caps;
  Dimensions dims;
};
RelaxedSolution solve_relaxed(const LaneDigraph& dg, const OdMatrix& od, double gamma,
                              std::optional<int> eta = std::nullopt);

/// LP optimum over the full arc set with every capacity pinned to `caps`.
LpSolution solve_with_capacities(const LaneDigraph& dg, const OdMatrix& od, double gamma,
                                 const Capacities& caps);

inline constexpr std::uint64_t kMaxEnumeration = 1'000'000;

/// Number of integral allocations brute force would visit.
std::uint64_t enumeration_size(const StreetGraph& g);

struct OracleResult {
  NetworkDesign design;
  double objective = 0.0;
};

/// Exhaustive minimum of bike + gamma * car over all integral allocations
/// with a strongly connected car network. Throws std::length_error when the
/// enumeration exceeds kMaxEnumeration.
OracleResult brute_force_optimum(const LaneDigraph& dg, const OdMatrix& od, double gamma);

/// brute_force_optimum for each gamma, sharing one enumeration.
RunResult brute_force_frontier(const LaneDigraph& dg, const OdMatrix& od,
                               const std::vector<double>& gammas);

}  // namespace lanealloc
