#include "lanealloc/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lanealloc {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kOptimize:
      return "optimize";
    case Algorithm::kTopDown:
      return "top_down";
    case Algorithm::kBottomUpCar:
      return "bottom_up_car";
    case Algorithm::kBottomUpBike:
      return "bottom_up_bike";
    case Algorithm::kOracle:
      return "oracle";
  }
  return "optimize";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (Algorithm a : {Algorithm::kOptimize, Algorithm::kTopDown, Algorithm::kBottomUpCar,
                      Algorithm::kBottomUpBike, Algorithm::kOracle}) {
    if (name == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm: " + name);
}

std::vector<ConfigViolation> check_config(const RunConfig& config, const StreetGraph& g) {
  std::vector<ConfigViolation> out;
  if (config.gammas.empty()) out.push_back({"gammas", std::nullopt, "at least one gamma required"});
  for (double gamma : config.gammas) {
    if (!std::isfinite(gamma) || gamma < 0.0) {
      out.push_back({"gammas", std::nullopt, "gamma must be finite and >= 0"});
      break;
    }
  }
  if (config.k < 1) out.push_back({"k", std::nullopt, "k must be >= 1"});
  if (config.eta && *config.eta < 1) out.push_back({"eta", std::nullopt, "eta must be >= 1"});
  if (!(config.top_down_car_speed_kmh > 0.0)) {
    out.push_back({"top_down_car_speed_kmh", std::nullopt, "speed must be positive"});
  }
  for (const FixedViolation& v : check_fixed(config.fixed, g)) {
    out.push_back({"fixed_lanes", v.edge_id, v.reason});
  }
  if (out.empty() && !config.fixed.empty()) {
    if (config.algorithm != Algorithm::kOptimize) {
      out.push_back({"fixed_lanes", std::nullopt, "fixed lanes apply to the optimize algorithm only"});
    } else {
      std::vector<int> units(g.num_streets());
      const std::vector<int> bike = fixed_bike_lanes(config.fixed, g);
      for (std::size_t s = 0; s < g.num_streets(); ++s) {
        units[s] = g.street(static_cast<StreetIndex>(s)).capacity - bike[s];
      }
      if (!car_orientable(g, units)) {
        out.push_back({"fixed_lanes", std::nullopt,
                       "fixed bike lanes leave no strongly connected car network"});
      }
    }
  }
  if (config.algorithm == Algorithm::kOracle && enumeration_size(g) > kMaxEnumeration) {
    out.push_back({"algorithm", std::nullopt,
                   "oracle needs at most " + std::to_string(kMaxEnumeration) + " allocations"});
  }
  return out;
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Instance::hash() const { return content_hash(graph_text + '\0' + od_text); }

Instance make_instance(StreetGraph graph, OdMatrix od) {
  validate_od(od, graph.num_nodes());
  Instance inst;
  inst.graph_text = street_graph_to_json(graph);
  inst.od_text = od_to_csv(od, graph);
  inst.graph = std::move(graph);
  inst.od = std::move(od);
  return inst;
}

Instance load_instance(const std::string& graph_path, const std::string& od_path) {
  StreetGraph g = load_street_graph(graph_path);
  OdMatrix od = load_od(od_path, g);
  return make_instance(std::move(g), std::move(od));
}

InstanceStats instance_stats(const Instance& inst) {
  InstanceStats s;
  s.nodes = inst.graph.num_nodes();
  s.streets = inst.graph.num_streets();
  s.lanes = inst.graph.total_capacity();
  s.od_paths = inst.od.num_demand();
  s.od_paths_extended = inst.od.pairs.size();
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

void add_designs(RunResult& r, std::vector<NetworkDesign> designs, const LaneDigraph& dg,
                 const OdMatrix& od) {
  for (NetworkDesign& d : designs) {
    validate_design(d, dg);
    ParetoPoint p = evaluate_design(d, dg, od, r.reference);
    p.design_index = static_cast<int>(r.designs.size());
    r.points.push_back(std::move(p));
    r.designs.push_back(std::move(d));
  }
}

}  // namespace

RunOutput execute_run(const RunConfig& config, const Instance& inst, const ProgressFn& progress) {
  RunOutput out;
  const auto t0 = Clock::now();
  try {
    auto violations = check_config(config, inst.graph);
    if (!violations.empty()) throw InvalidInstance(violations.front().reason);
    const LaneDigraph dg(inst.graph);
    out.result.reference = evaluate_times(all_car_design(dg), dg, inst.od);
    switch (config.algorithm) {
      case Algorithm::kOptimize: {
        RoundingOptions ro;
        ro.eta = config.eta;
        ro.progress = progress;
        ro.stats = &out.stats;
        for (double gamma : config.gammas) {
          add_designs(out.result,
                      round_and_refix(dg, inst.od, gamma, config.k, config.fixed, ro), dg,
                      inst.od);
        }
        if (config.eta) {
          for (double gamma : config.gammas) {
            const RelaxedSolution r = solve_relaxed(dg, inst.od, gamma, config.eta);
            out.eta_objective.push_back(r.solution.objective);
            out.eta_reevaluated_objective.push_back(
                solve_with_capacities(dg, inst.od, gamma, r.caps).objective);
          }
        }
        break;
      }
      case Algorithm::kTopDown:
      case Algorithm::kBottomUpCar:
      case Algorithm::kBottomUpBike: {
        BaselineVariant v;
        v.kind = baseline_from_string(to_string(config.algorithm));
        v.bike_priority_car_speed_kmh = config.top_down_car_speed_kmh;
        add_designs(out.result, run_baseline(dg, inst.od, v), dg, inst.od);
        break;
      }
      case Algorithm::kOracle: {
        RunResult r = brute_force_frontier(dg, inst.od, config.gammas);
        out.result.designs.clear();
        out.result.points.clear();
        add_designs(out.result, std::move(r.designs), dg, inst.od);
        break;
      }
    }
  } catch (const Cancelled&) {
    out.cancelled = true;
    out.error = "cancelled";
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.result.frontier = pareto_filter(out.result.points);
  out.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

std::string design_file_name(std::size_t point_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "designs/point_%04zu.json", point_index);
  return buf;
}

std::string config_to_json(const RunConfig& config) {
  Json fixed = Json::array();
  for (const FixedLane& f : config.fixed) {
    fixed.push_back({{"edge_id", f.edge_id},
                     {"mode", f.mode == LaneMode::kBike ? "bike" : "car"},
                     {"value", f.value}});
  }
  Json doc = {{"algorithm", to_string(config.algorithm)},
              {"gammas", config.gammas},
              {"k", config.k},
              {"eta", config.eta ? Json(*config.eta) : Json(nullptr)},
              {"fixed_lanes", std::move(fixed)},
              {"seed", config.seed},
              {"top_down_car_speed_kmh", config.top_down_car_speed_kmh}};
  return doc.dump();
}

RunConfig config_from_json(const std::string& text) {
  RunConfig c;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config JSON must be an object");
  try {
    if (doc.contains("algorithm")) c.algorithm = algorithm_from_string(doc["algorithm"].get<std::string>());
    if (doc.contains("gammas")) c.gammas = doc["gammas"].get<std::vector<double>>();
    if (doc.contains("k")) c.k = doc["k"].get<int>();
    if (doc.contains("eta") && !doc["eta"].is_null()) c.eta = doc["eta"].get<int>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("top_down_car_speed_kmh")) {
      c.top_down_car_speed_kmh = doc["top_down_car_speed_kmh"].get<double>();
    }
    if (doc.contains("fixed_lanes")) {
      for (const Json& f : doc["fixed_lanes"]) {
        FixedLane lane;
        lane.edge_id = f.at("edge_id").get<std::int64_t>();
        const std::string mode = f.at("mode").get<std::string>();
        if (mode == "bike") {
          lane.mode = LaneMode::kBike;
        } else if (mode == "car") {
          lane.mode = LaneMode::kCar;
        } else {
          throw std::invalid_argument("fixed lane mode must be bike or car");
        }
        lane.value = f.value("value", 1);
        c.fixed.push_back(lane);
      }
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("config JSON field: ") + e.what());
  }
  return c;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void write_bundle(const std::string& dir, const RunConfig& config, const Instance& inst,
                  const RunOutput& out) {
  const fs::path root(dir);
  const RunResult& r = out.result;
  std::vector<ParetoPoint> frontier = r.frontier;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    frontier[i].design_file = design_file_name(i);
    write_file(root / frontier[i].design_file,
               design_to_json(r.designs[frontier[i].design_index], inst.graph));
  }
  write_file(root / "frontier.csv", frontier_to_csv(frontier));
  write_file(root / "points.csv", frontier_to_csv(r.points));

  const std::string config_json = config_to_json(config);
  const InstanceStats st = instance_stats(inst);
  Json manifest;
  manifest["status"] = out.error.empty() ? "complete" : (out.cancelled ? "cancelled" : "failed");
  if (!out.error.empty()) manifest["error"] = out.error;
  manifest["instance_hash"] = inst.hash();
  manifest["run_hash"] = content_hash(inst.hash() + config_json);
  manifest["config"] = Json::parse(config_json);
  manifest["instance"] = {{"nodes", st.nodes},
                          {"streets", st.streets},
                          {"lanes", st.lanes},
                          {"od_paths", st.od_paths},
                          {"od_paths_extended", st.od_paths_extended}};
  manifest["reference"] = {{"bike_time_h", r.reference.bike}, {"car_time_h", r.reference.car}};
  manifest["results"] = {{"points", r.points.size()},
                         {"frontier_points", frontier.size()},
                         {"hypervolume", hypervolume(frontier)}};
  Json solver = {{"lp_solves", out.stats.lp_solves},
                 {"simplex_iterations", out.stats.simplex_iterations},
                 {"relaxed_objective", out.stats.relaxed_objective}};
  if (config.eta) {
    solver["eta_objective"] = out.eta_objective;
    solver["eta_reevaluated_objective"] = out.eta_reevaluated_objective;
  }
  manifest["solver"] = std::move(solver);
  manifest["timings"] = {{"lp_init_seconds", out.stats.init_seconds},
                         {"lp_solve_seconds", out.stats.solve_seconds},
                         {"wall_seconds", out.wall_seconds}};
  write_file(root / "manifest.json", manifest.dump(1) + "\n");
  if (!out.error.empty()) write_file(root / "FAILED", out.error + "\n");
}

}  // namespace lanealloc
