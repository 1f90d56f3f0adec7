#pragma once

#include <memory>

#include "lanealloc/graph.hpp"
#include "lanealloc/lp_model.hpp"
#include "lanealloc/lp_solver.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

/// Solves LPs produced by build_lp by generating s-t paths per pair instead
/// of loading every arc-flow column. The master problem holds the capacity
/// columns, one convexity row per pair and mode, and coupling rows only for
/// arcs that some generated path uses. Pricing is a shortest-path search with
/// the coupling duals added to the arc costs, so the result is an optimum of
/// the full arc formulation. Values are returned in the arc-column space of
/// `model`, which must outlive the session.
class FlowLpSession {
 public:
  FlowLpSession(const LaneDigraph& dg, const OdMatrix& od, const LpModel& model,
                const SolveOptions& options = {});
  ~FlowLpSession();
  FlowLpSession(const FlowLpSession&) = delete;
  FlowLpSession& operator=(const FlowLpSession&) = delete;

  /// Pins a capacity column. Flow columns cannot be pinned.
  void pin(int column, double value);
  LpSolution solve();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

LpSolution solve_flow_lp(const LaneDigraph& dg, const OdMatrix& od, const LpModel& model,
                         const SolveOptions& options = {});

}  // namespace lanealloc
