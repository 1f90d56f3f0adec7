#include "lanealloc/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "Highs.h"

namespace lanealloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double highs_bound(double b) {
  if (b == kInf) return kHighsInf;
  if (b == -kInf) return -kHighsInf;
  return b;
}

void configure(Highs& highs, const SolveOptions& options) {
  highs.setOptionValue("output_flag", false);
  highs.setOptionValue("threads", 1);
  highs.setOptionValue("random_seed", 0);
  highs.setOptionValue("solver", "simplex");
  highs.setOptionValue("primal_feasibility_tolerance", options.feasibility_tolerance);
  highs.setOptionValue("dual_feasibility_tolerance", options.optimality_tolerance);
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kUnbounded:
      return "unbounded";
    case SolveStatus::kError:
      return "error";
  }
  return "error";
}

double primal_residual(const LpInstance& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    double ax = 0.0;
    for (std::size_t k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
      ax += lp.row_values[k] * x[lp.row_cols[k]];
    }
    const double viol = lp.sense[i] == RowSense::kEqual ? std::abs(ax - lp.rhs[i])
                                                        : std::max(0.0, ax - lp.rhs[i]);
    worst = std::max(worst, viol);
  }
  for (std::size_t j = 0; j < lp.num_cols; ++j) {
    worst = std::max(worst, lp.col_lower[j] - x[j]);
    worst = std::max(worst, x[j] - lp.col_upper[j]);
  }
  return worst;
}

struct LpSession::Impl {
  Impl(const LpInstance& lp, const SolveOptions& options) : lp_(lp), options_(options) {
    configure(highs_, options_);
    load();
  }

  const LpInstance& instance() const { return lp_; }

  void pin(int column, double value) {
    lp_.col_lower[column] = lp_.col_upper[column] = value;
    highs_.changeColBounds(column, value, value);
  }

  LpSolution solve() {
    highs_.run();
    std::int64_t iterations = highs_.getInfo().simplex_iteration_count;
    LpSolution sol = collect();
    if ((sol.status == SolveStatus::kInfeasible || sol.status == SolveStatus::kUnbounded) &&
        sol.certificate.empty()) {
      // Presolve hides rays; ask again on the original model for the certificate.
      highs_.setOptionValue("presolve", "off");
      highs_.clearSolver();
      highs_.run();
      iterations += highs_.getInfo().simplex_iteration_count;
      LpSolution again = collect();
      highs_.setOptionValue("presolve", "choose");
      if (again.status != SolveStatus::kError) sol = std::move(again);
    }
    sol.iterations = iterations;
    sol.rounds = 1;
    return sol;
  }

  void load() {
    const std::size_t n = lp_.num_cols;
    const std::size_t m = lp_.num_rows();
    HighsLp h;
    h.num_col_ = static_cast<HighsInt>(n);
    h.num_row_ = static_cast<HighsInt>(m);
    h.sense_ = ObjSense::kMinimize;
    h.col_cost_ = lp_.objective;
    h.col_lower_.resize(n);
    h.col_upper_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      h.col_lower_[j] = highs_bound(lp_.col_lower[j]);
      h.col_upper_[j] = highs_bound(lp_.col_upper[j]);
    }
    h.row_lower_.resize(m);
    h.row_upper_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      h.row_upper_[i] = lp_.rhs[i];
      h.row_lower_[i] = lp_.sense[i] == RowSense::kEqual ? lp_.rhs[i] : -kHighsInf;
    }
    h.a_matrix_.format_ = MatrixFormat::kRowwise;
    h.a_matrix_.num_col_ = h.num_col_;
    h.a_matrix_.num_row_ = h.num_row_;
    h.a_matrix_.start_.assign(lp_.row_start.begin(), lp_.row_start.end());
    h.a_matrix_.index_.assign(lp_.row_cols.begin(), lp_.row_cols.end());
    h.a_matrix_.value_ = lp_.row_values;
    highs_.passModel(std::move(h));
  }

  LpSolution collect() {
    LpSolution sol;
    switch (highs_.getModelStatus()) {
      case HighsModelStatus::kOptimal: {
        sol.status = SolveStatus::kOptimal;
        const std::vector<double>& x = highs_.getSolution().col_value;
        sol.values.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(lp_.num_cols));
        // Snap round-off below zero and onto pinned bounds.
        for (std::size_t j = 0; j < lp_.num_cols; ++j) {
          double& v = sol.values[j];
          if (lp_.col_lower[j] == lp_.col_upper[j]) v = lp_.col_lower[j];
          if (v < 0.0 && v > -1e-9) v = 0.0;
        }
        for (std::size_t j = 0; j < lp_.num_cols; ++j) {
          sol.objective += lp_.objective[j] * sol.values[j];
        }
        sol.max_residual = primal_residual(lp_, sol.values);
        break;
      }
      case HighsModelStatus::kInfeasible: {
        sol.status = SolveStatus::kInfeasible;
        bool has_ray = false;
        std::vector<double> ray(lp_.num_rows());
        if (highs_.getDualRay(has_ray, ray.data()) == HighsStatus::kOk && has_ray) {
          for (std::size_t r = 0; r < ray.size(); ++r) {
            if (std::abs(ray[r]) > 1e-9) sol.certificate.push_back(static_cast<int>(r));
          }
          std::sort(sol.certificate.begin(), sol.certificate.end());
        }
        break;
      }
      case HighsModelStatus::kUnbounded:
      case HighsModelStatus::kUnboundedOrInfeasible: {
        const bool unbounded = highs_.getModelStatus() == HighsModelStatus::kUnbounded;
        sol.status = unbounded ? SolveStatus::kUnbounded : SolveStatus::kInfeasible;
        bool has_ray = false;
        std::vector<double> ray(lp_.num_cols);
        if (highs_.getPrimalRay(has_ray, ray.data()) == HighsStatus::kOk && has_ray) {
          sol.status = SolveStatus::kUnbounded;
          for (std::size_t c = 0; c < ray.size(); ++c) {
            if (std::abs(ray[c]) > 1e-9) sol.certificate.push_back(static_cast<int>(c));
          }
          std::sort(sol.certificate.begin(), sol.certificate.end());
        }
        break;
      }
      default:
        sol.status = SolveStatus::kError;
    }
    return sol;
  }

  LpInstance lp_;
  SolveOptions options_;
  Highs highs_;
};

LpSession::LpSession(const LpInstance& lp, const SolveOptions& options)
    : impl_(std::make_unique<Impl>(lp, options)) {}

LpSession::~LpSession() = default;

void LpSession::pin(int column, double value) { impl_->pin(column, value); }

LpSolution LpSession::solve() { return impl_->solve(); }

const LpInstance& LpSession::instance() const { return impl_->instance(); }

LpSolution solve(const LpInstance& lp, const SolveOptions& options) {
  LpSession session(lp, options);
  return session.solve();
}

LpSolution resolve_with_bounds(const LpInstance& lp, const std::map<int, double>& pinned,
                               const SolveOptions& options) {
  LpSession session(lp, options);
  for (auto [col, value] : pinned) session.pin(col, value);
  return session.solve();
}

}  // namespace lanealloc
