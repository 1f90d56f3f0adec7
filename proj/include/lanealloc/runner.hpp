#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lanealloc/allocator.hpp"
#include "lanealloc/baselines.hpp"
#include "lanealloc/graph.hpp"
#include "lanealloc/lp_model.hpp"
#include "lanealloc/od.hpp"

namespace lanealloc {

enum class Algorithm { kOptimize, kTopDown, kBottomUpCar, kBottomUpBike, kOracle };

const char* to_string(Algorithm a);
/// Throws std::invalid_argument for unknown names.
Algorithm algorithm_from_string(const std::string& name);

struct RunConfig {
  Algorithm algorithm = Algorithm::kOptimize;
  std::vector<double> gammas{1.0, 2.0, 4.0, 8.0};
  int k = 50;
  std::optional<int> eta;
  FixedSet fixed;
  std::uint64_t seed = 0;
  double top_down_car_speed_kmh = 10.0;
};

struct ConfigViolation {
  std::string field;
  std::optional<std::int64_t> edge_id;
  std::string reason;
};

/// Every problem with the config for this graph; empty when runnable.
std::vector<ConfigViolation> check_config(const RunConfig& config, const StreetGraph& g);

/// Graph and OD matrix plus the canonical bytes they were read from.
struct Instance {
  StreetGraph graph;
  OdMatrix od;
  std::string graph_text;
  std::string od_text;

  /// Hex digest of the graph and OD bytes.
  std::string hash() const;
};

Instance make_instance(StreetGraph graph, OdMatrix od);
Instance load_instance(const std::string& graph_path, const std::string& od_path);

/// 64-bit FNV-1a as 16 hex digits.
std::string content_hash(const std::string& bytes);

struct InstanceStats {
  std::size_t nodes = 0;
  std::size_t streets = 0;
  int lanes = 0;
  std::size_t od_paths = 0;
  std::size_t od_paths_extended = 0;
};
InstanceStats instance_stats(const Instance& inst);

struct RunOutput {
  RunResult result;
  RunStats stats;
  double wall_seconds = 0.0;
  // Per gamma, when eta is set: objective of the restricted LP and of the
  // full LP with its capacities pinned.
  std::vector<double> eta_objective;
  std::vector<double> eta_reevaluated_objective;
  std::string error;  // empty on success
  bool cancelled = false;
};

using ProgressFn = std::function<bool(const RoundingProgress&)>;

/// Runs the configured algorithm. Failures are recorded in `error`, keeping
/// every design finished before the failure.
RunOutput execute_run(const RunConfig& config, const Instance& inst,
                      const ProgressFn& progress = {});

/// Writes frontier.csv, points.csv, designs/point_<i>.json and
/// manifest.json into `dir`, plus a FAILED marker when the run failed.
void write_bundle(const std::string& dir, const RunConfig& config, const Instance& inst,
                  const RunOutput& out);

std::string config_to_json(const RunConfig& config);
/// Throws std::invalid_argument on malformed fields.
RunConfig config_from_json(const std::string& text);

std::string design_file_name(std::size_t point_index);

}  // namespace lanealloc
