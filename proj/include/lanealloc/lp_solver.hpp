#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "lanealloc/lp_model.hpp"

namespace lanealloc {

enum class SolveStatus : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kError };

const char* to_string(SolveStatus s);

struct LpSolution {
  SolveStatus status = SolveStatus::kError;
  std::vector<double> values;
  double objective = 0.0;
  std::int64_t iterations = 0;
  // Master re-solves of column generation (1 for a plain solve).
  int rounds = 0;
  // Largest absolute row or bound violation of `values`.
  double max_residual = 0.0;
  // Rows of an infeasibility certificate, or columns of an unbounded ray.
  std::vector<int> certificate;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct SolveOptions {
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  // Reserved: starting basis from an earlier solve of the same structure.
  const std::vector<std::int8_t>* basis_hint = nullptr;
};

/// Optimal basic solution of `lp` by the simplex method.
LpSolution solve(const LpInstance& lp, const SolveOptions& options = {});

/// Solves with the given columns pinned to exact values.
LpSolution resolve_with_bounds(const LpInstance& lp, const std::map<int, double>& pinned,
                               const SolveOptions& options = {});

/// Max absolute violation of rows and bounds by `x`.
double primal_residual(const LpInstance& lp, const std::vector<double>& x);

/// Keeps one model loaded across a sequence of bound changes so that each
/// re-solve starts from the previous optimal basis.
class LpSession {
 public:
  explicit LpSession(const LpInstance& lp, const SolveOptions& options = {});
  ~LpSession();
  LpSession(const LpSession&) = delete;
  LpSession& operator=(const LpSession&) = delete;

  void pin(int column, double value);
  LpSolution solve();
  const LpInstance& instance() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lanealloc
