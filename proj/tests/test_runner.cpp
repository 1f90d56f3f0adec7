#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lanealloc/runner.hpp"
#include "support.hpp"

using namespace lanealloc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Instance small_instance(std::uint64_t seed = 3) {
  auto s = testing::synthetic(12, seed, 0.2);
  return make_instance(std::move(s.graph), std::move(s.od));
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lanealloc_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("content hash is FNV-1a") {
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == "af63dc4c8601ec8c");
  const Instance a = small_instance(3), b = small_instance(3), c = small_instance(4);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
}

TEST_CASE("instance stats") {
  const Instance inst = small_instance();
  const InstanceStats st = instance_stats(inst);
  CHECK(st.nodes == 12);
  CHECK(st.od_paths == 28);
  CHECK(st.od_paths_extended == st.od_paths + st.nodes);
  CHECK(st.lanes == 2 * static_cast<int>(st.streets));
}

TEST_CASE("config checks") {
  const Instance inst = small_instance();
  RunConfig c;
  CHECK(check_config(c, inst.graph).empty());

  RunConfig bad = c;
  bad.gammas = {};
  bad.k = 0;
  bad.eta = 0;
  const auto v = check_config(bad, inst.graph);
  std::set<std::string> fields;
  for (const auto& x : v) fields.insert(x.field);
  CHECK(fields == std::set<std::string>{"gammas", "k", "eta"});

  RunConfig neg = c;
  neg.gammas = {1.0, -2.0};
  CHECK(check_config(neg, inst.graph).size() == 1);

  RunConfig fixed = c;
  fixed.fixed = {{999, LaneMode::kCar, 1}};
  const auto fv = check_config(fixed, inst.graph);
  REQUIRE(fv.size() == 1);
  CHECK(fv[0].field == "fixed_lanes");
  CHECK(fv[0].edge_id == 999);

  RunConfig baseline_fixed = c;
  baseline_fixed.algorithm = Algorithm::kTopDown;
  baseline_fixed.fixed = {{inst.graph.street(0).id, LaneMode::kCar, 1}};
  CHECK_FALSE(check_config(baseline_fixed, inst.graph).empty());

  RunConfig oracle = c;
  oracle.algorithm = Algorithm::kOracle;
  CHECK_FALSE(check_config(oracle, inst.graph).empty());

  // A bike lane on a bridge leaves cars without a way across.
  const StreetGraph bb = testing::barbell(2);
  RunConfig bridge = c;
  bridge.fixed = {{7, LaneMode::kBike, 2}};
  CHECK_FALSE(check_config(bridge, bb).empty());
}

TEST_CASE("config JSON round trip") {
  RunConfig c;
  c.algorithm = Algorithm::kBottomUpBike;
  c.gammas = {0.5, 3.0};
  c.k = 7;
  c.eta = 40;
  c.seed = 99;
  c.fixed = {{4, LaneMode::kBike, 1}, {5, LaneMode::kCar, 2}};
  const std::string text = config_to_json(c);
  const RunConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(back.fixed.size() == 2);
  CHECK(back.fixed[1].mode == LaneMode::kCar);
  CHECK_THROWS_AS(config_from_json("{\"algorithm\": \"nope\"}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"fixed_lanes\": [{\"edge_id\": 1, \"mode\": \"tram\"}]}"),
                  std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("[1]"), std::invalid_argument);
  CHECK(algorithm_from_string("oracle") == Algorithm::kOracle);
}

TEST_CASE("run bundle") {
  const Instance inst = small_instance();
  RunConfig c;
  c.gammas = {1.0, 4.0};
  c.k = 10;
  const RunOutput out = execute_run(c, inst);
  REQUIRE(out.error.empty());
  CHECK(out.stats.lp_solves > 0);

  const fs::path a = scratch("bundle_a"), b = scratch("bundle_b");
  write_bundle(a.string(), c, inst, out);
  write_bundle(b.string(), c, inst, execute_run(c, inst));
  CHECK(slurp(a / "frontier.csv") == slurp(b / "frontier.csv"));
  CHECK(slurp(a / "points.csv") == slurp(b / "points.csv"));
  CHECK_FALSE(fs::exists(a / "FAILED"));

  const auto frontier = frontier_from_csv(slurp(a / "frontier.csv"));
  REQUIRE(frontier.size() == out.result.frontier.size());
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    CHECK(frontier[i].design_file == design_file_name(i));
    CHECK(slurp(a / frontier[i].design_file) == slurp(b / frontier[i].design_file));
    const NetworkDesign d = design_from_json(slurp(a / frontier[i].design_file), inst.graph);
    CHECK(design_violations(d, LaneDigraph(inst.graph)).empty());
  }

  auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  CHECK(ma["status"] == "complete");
  CHECK(ma["instance_hash"] == inst.hash());
  CHECK(ma["config"]["k"] == 10);
  CHECK(ma.contains("timings"));
  CHECK(ma["solver"]["lp_solves"].get<int>() > 0);
  ma.erase("timings");
  mb.erase("timings");
  CHECK(ma.dump() == mb.dump());

  RunConfig other = c;
  other.k = 5;
  write_bundle(b.string(), other, inst, execute_run(other, inst));
  auto mc = nlohmann::json::parse(slurp(b / "manifest.json"));
  CHECK(mc["instance_hash"] == ma["instance_hash"]);
  CHECK(mc["run_hash"] != ma["run_hash"]);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("failed runs keep partial results") {
  const Instance inst = small_instance();
  RunConfig c;
  c.gammas = {1.0, 2.0, 4.0};
  c.k = 10;
  int calls = 0;
  const RunOutput out = execute_run(c, inst, [&](const RoundingProgress& p) {
    ++calls;
    return p.gamma < 2.0;
  });
  CHECK(out.cancelled);
  CHECK_FALSE(out.error.empty());
  CHECK_FALSE(out.result.designs.empty());
  for (const auto& d : out.result.designs) CHECK(d.provenance.gamma == 1.0);
  const fs::path dir = scratch("bundle_failed");
  write_bundle(dir.string(), c, inst, out);
  CHECK(fs::exists(dir / "FAILED"));
  CHECK(fs::exists(dir / "frontier.csv"));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "cancelled");
  fs::remove_all(dir);
}

TEST_CASE("baseline, oracle and eta runs") {
  const StreetGraph g = testing::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}, {1, 3}});
  const Instance inst = make_instance(g, testing::demand(g, {{0, 2}, {3, 1}, {1, 0}}));
  RunConfig c;
  c.algorithm = Algorithm::kOracle;
  const RunOutput oracle = execute_run(c, inst);
  REQUIRE(oracle.error.empty());
  CHECK(oracle.result.designs.size() == 4);

  c.algorithm = Algorithm::kBottomUpCar;
  const RunOutput bu = execute_run(c, inst);
  REQUIRE(bu.error.empty());
  CHECK(bu.result.designs.front().num_bike_streets() == 0);

  const Instance big = small_instance(5);
  RunConfig e;
  e.gammas = {1.0};
  e.k = 20;
  e.eta = 8;
  const RunOutput eta = execute_run(e, big);
  INFO(eta.error);
  REQUIRE(eta.error.empty());
  REQUIRE(eta.eta_objective.size() == 1);
  // Unrestricted routing under the same capacities cannot cost more.
  CHECK(eta.eta_reevaluated_objective[0] <= eta.eta_objective[0] + 1e-9);
}
