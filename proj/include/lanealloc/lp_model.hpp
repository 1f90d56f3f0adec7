#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lanealloc/graph.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

enum class RowSense : std::uint8_t { kEqual, kLessEqual };

/// min c'x  s.t.  A x (= | <=) b,  lower <= x <= upper.
/// A is stored row-major. Lower bounds are 0 for every column; an upper bound
/// equal to the lower bound pins the column.
struct LpInstance {
  std::size_t num_cols = 0;
  std::vector<double> objective;
  std::vector<double> col_lower;
  std::vector<double> col_upper;

  std::vector<std::size_t> row_start{0};
  std::vector<int> row_cols;
  std::vector<double> row_values;
  std::vector<RowSense> sense;
  std::vector<double> rhs;

  std::size_t num_rows() const { return sense.size(); }
  std::size_t num_nonzeros() const { return row_cols.size(); }

  /// Appends a row; `cols` and `values` must have equal length.
  void add_row(const std::vector<int>& cols, const std::vector<double>& values,
               RowSense s, double b);
};

/// Sparse triplet text format used for debugging and external cross-checks.
std::string lp_to_triplets(const LpInstance& lp);
LpInstance lp_from_triplets(const std::string& text);

enum class FlowKind : std::uint8_t { kCar = 0, kBike = 1, kShared = 2 };
enum class CapKind : std::uint8_t { kCar = 0, kBike = 1 };

struct Dimensions {
  std::size_t columns = 0;
  std::size_t rows = 0;
  std::size_t flow_vars = 0;
  std::size_t cap_vars = 0;
};

/// Bidirectional map between model variables and LP columns. Flow columns
/// come first (pairs in input order, arcs ascending, kinds car/bike/shared),
/// followed by two capacity columns per arc (car, bike).
class VarIndex {
 public:
  VarIndex() = default;
  VarIndex(std::size_t num_arcs, std::vector<std::vector<ArcId>> arcs_per_pair,
           std::vector<bool> full_pair);

  std::size_t num_pairs() const { return pair_offset_.size() - 1; }
  std::size_t num_arcs() const { return num_arcs_; }

  std::optional<int> flow_column(std::size_t pair, ArcId arc, FlowKind kind) const;
  int cap_column(ArcId arc, CapKind kind) const;

  struct FlowVar {
    std::size_t pair;
    ArcId arc;
    FlowKind kind;
  };
  struct CapVar {
    ArcId arc;
    CapKind kind;
  };
  bool is_flow(int column) const;
  FlowVar flow_var(int column) const;
  CapVar cap_var(int column) const;

  /// Arcs carrying flow variables for a pair (sorted).
  const std::vector<ArcId>& pair_arcs(std::size_t pair) const;
  std::size_t flow_vars() const { return pair_offset_.back(); }
  std::size_t cap_vars() const { return 2 * num_arcs_; }
  std::size_t columns() const { return flow_vars() + cap_vars(); }

 private:
  std::size_t num_arcs_ = 0;
  std::vector<std::vector<ArcId>> arcs_;
  std::vector<bool> full_;
  std::vector<std::size_t> pair_offset_{0};
};

Dimensions dimensions(const VarIndex& idx, const LpInstance& lp);

enum class LaneMode : std::uint8_t { kBike, kCar };

/// A pinned allocation on one street. A bike entry fixes the bidirectional
/// bike capacity to `value` on both arcs. A car entry designates the street as
/// car-only (bike capacity pinned to 0) and reserves `value` car lanes.
struct FixedLane {
  std::int64_t edge_id = 0;
  LaneMode mode = LaneMode::kCar;
  int value = 1;
};
using FixedSet = std::vector<FixedLane>;

struct FixedViolation {
  std::int64_t edge_id = 0;
  std::string reason;
};

/// Every violation of the capacity rule or of the one-entry-per-street rule.
std::vector<FixedViolation> check_fixed(const FixedSet& fixed, const StreetGraph& g);
/// Throws InvalidInstance listing the first violation.
void validate_fixed(const FixedSet& fixed, const StreetGraph& g);

struct ModelOptions {
  double gamma = 1.0;
  FixedSet fixed;
  // Restrict demand pairs to their spatial neighbourhood corridor.
  std::optional<int> eta;
  // Emit the bike bidirectionality rows (disable only for experiments).
  bool bidirectional_bike = true;
};

struct LpModel {
  LpInstance lp;
  VarIndex index;
};

LpModel build_lp(const LaneDigraph& dg, const OdMatrix& od, const ModelOptions& options);

/// Fractional capacities read back from a solution vector.
struct Capacities {
  std::vector<double> car;   // per arc
  std::vector<double> bike;  // per arc
};
Capacities extract_capacities(const VarIndex& idx, const std::vector<double>& values);

/// Pins every capacity column to the given per-arc values.
void pin_capacities(LpInstance& lp, const VarIndex& idx, const Capacities& caps);

}  // namespace lanealloc
