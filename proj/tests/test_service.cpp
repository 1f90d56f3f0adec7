#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "lanealloc/runner.hpp"
#include "lanealloc/service.hpp"
#include "support.hpp"

using namespace lanealloc;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

Json parse(const httplib::Result& r) {
  REQUIRE(r);
  return Json::parse(r->body);
}

Json upload_body(const StreetGraph& g, const OdMatrix& od) {
  Json pairs = Json::array();
  for (const OdPair& p : od.pairs) {
    if (p.is_aux) continue;
    pairs.push_back({{"s", g.node(p.s).id}, {"t", g.node(p.t).id}});
  }
  return {{"graph", Json::parse(street_graph_to_json(g))}, {"od", pairs}, {"aux_seed", 3}};
}

std::string wait_for(httplib::Client& cli, const std::string& job, double limit_s = 120.0) {
  const auto t0 = std::chrono::steady_clock::now();
  for (;;) {
    const Json j = parse(cli.Get("/jobs/" + job));
    const std::string state = j["state"];
    if (state == "done" || state == "failed") return state;
    if (std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > limit_s) {
      return "timeout";
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace

TEST_CASE("service lifecycle") {
  const fs::path storage = fs::temp_directory_path() / "lanealloc_service_test";
  fs::remove_all(storage);
  const auto inst = testing::synthetic(14, 21, 0.15);
  const std::int64_t locked = inst.graph.street(4).id;
  std::string instance_id, job_a, job_b;

  {
    Service svc(ServiceOptions{storage.string(), 2});
    const int port = svc.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(60);

    auto r = cli.Post("/instances", upload_body(inst.graph, inst.od).dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    instance_id = Json::parse(r->body)["instance_id"];
    CHECK(Json::parse(r->body)["stats"]["od_paths_extended"] == 14 + 29);

    const Json info = parse(cli.Get("/instances/" + instance_id));
    CHECK(info["streets"].size() == inst.graph.num_streets());
    CHECK(info["nodes"].size() == 14);
    CHECK(info["nodes"][0].contains("x"));
    CHECK(cli.Get("/instances/ffff")->status == 404);

    CHECK(cli.Post("/instances", "{not json", "application/json")->status == 400);
    r = cli.Post("/instances", R"({"graph":{"nodes":[],"edges":[]},"od":[]})",
                 "application/json");
    CHECK(r->status == 422);

    r = cli.Post("/jobs", Json{{"instance_id", "0000"}}.dump(), "application/json");
    CHECK(r->status == 404);

    r = cli.Post("/jobs",
                 Json{{"instance_id", instance_id},
                      {"k", 0},
                      {"fixed_lanes", {{{"edge_id", 123456}, {"mode", "car"}}}}}
                     .dump(),
                 "application/json");
    REQUIRE(r);
    CHECK(r->status == 422);
    const Json bad = Json::parse(r->body);
    bool edge_reported = false;
    for (const auto& v : bad["violations"]) {
      if (v.contains("edge_id") && v["edge_id"] == 123456) edge_reported = true;
    }
    CHECK(edge_reported);
    CHECK(bad["violations"].size() == 2);

    // Two jobs at once on the same instance.
    r = cli.Post("/jobs",
                 Json{{"instance_id", instance_id},
                      {"gammas", {1, 4}},
                      {"k", 10},
                      {"fixed_lanes", {{{"edge_id", locked}, {"mode", "car"}}}}}
                     .dump(),
                 "application/json");
    REQUIRE(r);
    CHECK(r->status == 202);
    job_a = Json::parse(r->body)["job_id"];
    r = cli.Post("/jobs", Json{{"instance_id", instance_id}, {"gammas", {2}}, {"k", 10}}.dump(),
                 "application/json");
    job_b = Json::parse(r->body)["job_id"];
    CHECK(job_a != job_b);

    CHECK(wait_for(cli, job_a) == "done");
    CHECK(wait_for(cli, job_b) == "done");
    const Json ja = parse(cli.Get("/jobs/" + job_a));
    CHECK(ja["progress"]["streets_fixed"] == ja["progress"]["total_streets"]);
    CHECK(ja["config"]["fixed_lanes"][0]["edge_id"] == locked);

    const Json fa = parse(cli.Get("/jobs/" + job_a + "/frontier"));
    const Json fb = parse(cli.Get("/jobs/" + job_b + "/frontier"));
    REQUIRE(fa["rows"].size() >= 1);
    REQUIRE(fb["rows"].size() >= 1);
    for (const auto& row : fb["rows"]) CHECK(row["gamma"] == 2.0);

    for (const auto& row : fa["rows"]) {
      const std::string path =
          "/jobs/" + job_a + "/designs/" + std::to_string(row["point_index"].get<int>());
      auto d1 = cli.Get(path);
      auto d2 = cli.Get(path);
      REQUIRE(d1);
      CHECK(d1->status == 200);
      CHECK(d1->body == d2->body);
      const Json design = Json::parse(d1->body);
      for (const auto& s : design["streets"]) {
        if (s["edge_id"] == locked) CHECK(s["bike"] == 0);
      }
    }
    CHECK(cli.Get("/jobs/" + job_a + "/designs/999")->status == 404);
    CHECK(cli.Get("/jobs/" + job_a + "/designs/abc")->status == 404);
    CHECK(cli.Delete("/jobs/" + job_a)->status == 409);
    CHECK(cli.Get("/jobs/j999999")->status == 404);
    CHECK(cli.Delete("/jobs/j999999")->status == 404);

    // Cancellation lands between LP solves.
    r = cli.Post("/jobs",
                 Json{{"instance_id", instance_id}, {"gammas", {1, 2, 4, 8, 16, 32}}, {"k", 1}}
                     .dump(),
                 "application/json");
    const std::string job_c = Json::parse(r->body)["job_id"];
    CHECK(cli.Get("/jobs/" + job_c + "/frontier")->status == 409);
    CHECK(cli.Delete("/jobs/" + job_c)->status == 202);
    CHECK(wait_for(cli, job_c) == "failed");
    CHECK(parse(cli.Get("/jobs/" + job_c))["error"] == "cancelled");
    svc.stop();
  }

  // Finished jobs survive a restart.
  {
    Service svc(ServiceOptions{storage.string(), 1});
    const int port = svc.start("127.0.0.1", 0);
    REQUIRE(port > 0);
    httplib::Client cli("127.0.0.1", port);
    CHECK(parse(cli.Get("/jobs/" + job_a))["state"] == "done");
    CHECK(parse(cli.Get("/jobs/" + job_a + "/frontier"))["rows"].size() >= 1);
    CHECK(cli.Get("/instances/" + instance_id)->status == 200);
    auto r = cli.Post("/jobs", Json{{"instance_id", instance_id}, {"gammas", {1}}}.dump(),
                      "application/json");
    const std::string job_d = Json::parse(r->body)["job_id"];
    CHECK(job_d != job_a);
    CHECK(job_d != job_b);
    CHECK(wait_for(cli, job_d) == "done");
    svc.stop();
  }
  fs::remove_all(storage);
}
