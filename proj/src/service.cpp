#include "lanealloc/service.hpp"

#include <atomic>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lanealloc/generator.hpp"
#include "lanealloc/runner.hpp"

namespace lanealloc {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string now_utc() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message,
                 Json violations = nullptr) {
  Json body = {{"error", message}};
  if (!violations.is_null()) body["violations"] = std::move(violations);
  reply(res, status, body);
}

struct Job {
  std::string id;
  std::string instance_id;
  RunConfig config;
  std::string state = "queued";
  int iteration = 0;
  int streets_fixed = 0;
  int total_streets = 0;
  std::string created;
  std::string updated;
  std::string error;
  std::atomic<bool> cancel{false};
};

Json job_json(const Job& j) {
  Json body = {{"job_id", j.id},
               {"instance_id", j.instance_id},
               {"state", j.state},
               {"progress",
                {{"iteration", j.iteration},
                 {"streets_fixed", j.streets_fixed},
                 {"total_streets", j.total_streets}}},
               {"created", j.created},
               {"updated", j.updated},
               {"config", Json::parse(config_to_json(j.config))}};
  if (!j.error.empty()) body["error"] = j.error;
  return body;
}

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceOptions o) : options(std::move(o)) {
    root = options.storage_dir;
    fs::create_directories(root / "instances");
    fs::create_directories(root / "jobs");
    restore();
    routes();
    for (int i = 0; i < std::max(1, options.workers); ++i) {
      workers.emplace_back([this] { work(); });
    }
  }

  ~Impl() { shutdown(); }

  void shutdown() {
    server.stop();
    if (server_thread.joinable()) server_thread.join();
    {
      std::lock_guard lock(mu);
      if (stopping) return;
      stopping = true;
      for (auto& [id, job] : jobs) job->cancel = true;
    }
    cv.notify_all();
    for (auto& w : workers) w.join();
  }

  // Picks up instances and finished jobs from an earlier process.
  void restore() {
    for (const auto& entry : fs::directory_iterator(root / "jobs")) {
      const fs::path meta = entry.path() / "job.json";
      if (!fs::exists(meta)) continue;
      try {
        Json doc = Json::parse(read_file(meta));
        auto job = std::make_shared<Job>();
        job->id = doc.at("job_id").get<std::string>();
        job->instance_id = doc.at("instance_id").get<std::string>();
        job->config = config_from_json(doc.at("config").dump());
        job->state = doc.at("state").get<std::string>();
        job->iteration = doc.at("progress").at("iteration").get<int>();
        job->streets_fixed = doc.at("progress").at("streets_fixed").get<int>();
        job->total_streets = doc.at("progress").at("total_streets").get<int>();
        job->created = doc.at("created").get<std::string>();
        job->updated = doc.at("updated").get<std::string>();
        job->error = doc.value("error", "");
        if (job->state == "queued" || job->state == "running") {
          job->state = "failed";
          job->error = "interrupted by service restart";
        }
        next_job = std::max(next_job, std::stoi(job->id.substr(1)) + 1);
        jobs[job->id] = job;
      } catch (const std::exception&) {
        // A half-written job directory is ignored.
      }
    }
  }

  std::optional<Instance> find_instance(const std::string& id) {
    {
      std::lock_guard lock(mu);
      auto it = instances.find(id);
      if (it != instances.end()) return *it->second;
    }
    const fs::path dir = root / "instances" / id;
    if (id.find('/') != std::string::npos || !fs::exists(dir / "graph.json")) return std::nullopt;
    StreetGraph g = street_graph_from_json(read_file(dir / "graph.json"));
    OdMatrix od = od_from_csv(read_file(dir / "od.csv"), g);
    auto inst = std::make_shared<Instance>(make_instance(std::move(g), std::move(od)));
    std::lock_guard lock(mu);
    instances[id] = inst;
    return *inst;
  }

  std::shared_ptr<Job> find_job(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = jobs.find(id);
    return it == jobs.end() ? nullptr : it->second;
  }

  void persist(const Job& job) {
    Json doc;
    {
      std::lock_guard lock(mu);
      doc = job_json(job);
    }
    write_file(root / "jobs" / job.id / "job.json", doc.dump(1) + "\n");
  }

  void routes() {
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        reply_error(res, 500, e.what());
      } catch (...) {
        reply_error(res, 500, "internal error");
      }
    });

    server.Post("/instances", [this](const httplib::Request& req, httplib::Response& res) {
      post_instance(req, res);
    });
    server.Get("/instances/:id", [this](const httplib::Request& req, httplib::Response& res) {
      get_instance(req.path_params.at("id"), res);
    });
    server.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      post_job(req, res);
    });
    server.Get("/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      auto job = find_job(req.path_params.at("id"));
      if (!job) return reply_error(res, 404, "unknown job");
      std::lock_guard lock(mu);
      reply(res, 200, job_json(*job));
    });
    server.Get("/jobs/:id/frontier", [this](const httplib::Request& req, httplib::Response& res) {
      get_frontier(req.path_params.at("id"), res);
    });
    server.Get("/jobs/:id/designs/:index",
               [this](const httplib::Request& req, httplib::Response& res) {
                 get_design(req.path_params.at("id"), req.path_params.at("index"), res);
               });
    server.Delete("/jobs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      delete_job(req.path_params.at("id"), res);
    });
  }

  void post_instance(const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      return reply_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
    std::shared_ptr<Instance> inst;
    try {
      if (!body.is_object() || !body.contains("graph")) {
        throw InvalidInstance("body needs a \"graph\" object");
      }
      StreetGraph g = street_graph_from_json(body["graph"].dump());
      OdMatrix od;
      if (body.contains("od_csv")) {
        od = od_from_csv(body["od_csv"].get<std::string>(), g);
      } else if (body.contains("od")) {
        for (const Json& p : body["od"]) {
          auto s = g.find_node(p.at("s").get<std::int64_t>());
          auto t = g.find_node(p.at("t").get<std::int64_t>());
          if (!s || !t) throw InvalidInstance("OD pair references an unknown node");
          OdPair pair;
          pair.s = *s;
          pair.t = *t;
          pair.weight_bike = p.value("weight_bike", 1.0);
          pair.weight_car = p.value("weight_car", 1.0);
          pair.flow = p.value("flow", 1);
          pair.is_aux = p.value("is_aux", false);
          od.pairs.push_back(pair);
        }
      } else {
        throw InvalidInstance("body needs \"od\" or \"od_csv\"");
      }
      if (od.num_aux() == 0) od = extend_with_aux(od, g, body.value("aux_seed", std::uint64_t{0}));
      inst = std::make_shared<Instance>(make_instance(std::move(g), std::move(od)));
    } catch (const InvalidInstance& e) {
      return reply_error(res, 422, e.what(), Json::array({{{"field", "instance"}, {"reason", e.what()}}}));
    } catch (const Json::exception& e) {
      return reply_error(res, 422, e.what(), Json::array({{{"field", "instance"}, {"reason", e.what()}}}));
    }
    const std::string id = inst->hash();
    const fs::path dir = root / "instances" / id;
    {
      std::lock_guard lock(mu);
      if (!instances.count(id)) {
        write_file(dir / "graph.json", inst->graph_text);
        write_file(dir / "od.csv", inst->od_text);
        instances[id] = inst;
      }
    }
    const InstanceStats st = instance_stats(*inst);
    reply(res, 201, {{"instance_id", id},
                     {"stats",
                      {{"nodes", st.nodes},
                       {"streets", st.streets},
                       {"lanes", st.lanes},
                       {"od_paths", st.od_paths},
                       {"od_paths_extended", st.od_paths_extended}}}});
  }

  void get_instance(const std::string& id, httplib::Response& res) {
    auto inst = find_instance(id);
    if (!inst) return reply_error(res, 404, "unknown instance");
    const InstanceStats st = instance_stats(*inst);
    Json nodes = Json::array();
    for (const Node& n : inst->graph.nodes()) {
      nodes.push_back({{"node_id", n.id}, {"x", n.x_km}, {"y", n.y_km}});
    }
    Json streets = Json::array();
    for (const Street& s : inst->graph.streets()) {
      streets.push_back({{"edge_id", s.id},
                         {"u", inst->graph.node(s.u).id},
                         {"v", inst->graph.node(s.v).id},
                         {"length_km", s.length_km},
                         {"gradient_pct", s.gradient_pct},
                         {"speed_limit_kmh", s.speed_limit_kmh},
                         {"capacity", s.capacity}});
    }
    reply(res, 200, {{"instance_id", id},
                     {"stats",
                      {{"nodes", st.nodes},
                       {"streets", st.streets},
                       {"lanes", st.lanes},
                       {"od_paths", st.od_paths},
                       {"od_paths_extended", st.od_paths_extended}}},
                     {"nodes", std::move(nodes)},
                     {"streets", std::move(streets)}});
  }

  void post_job(const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::parse_error& e) {
      return reply_error(res, 400, std::string("malformed JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("instance_id") || !body["instance_id"].is_string()) {
      return reply_error(res, 422, "instance_id required",
                         Json::array({{{"field", "instance_id"}, {"reason", "required"}}}));
    }
    const std::string instance_id = body["instance_id"].get<std::string>();
    auto inst = find_instance(instance_id);
    if (!inst) return reply_error(res, 404, "unknown instance");
    RunConfig config;
    try {
      config = config_from_json(body.dump());
    } catch (const std::invalid_argument& e) {
      return reply_error(res, 422, e.what(),
                         Json::array({{{"field", "config"}, {"reason", e.what()}}}));
    }
    const auto violations = check_config(config, inst->graph);
    if (!violations.empty()) {
      Json list = Json::array();
      for (const ConfigViolation& v : violations) {
        Json item = {{"field", v.field}, {"reason", v.reason}};
        if (v.edge_id) item["edge_id"] = *v.edge_id;
        list.push_back(std::move(item));
      }
      return reply_error(res, 422, "invalid configuration", std::move(list));
    }

    auto job = std::make_shared<Job>();
    job->instance_id = instance_id;
    job->config = config;
    job->total_streets = static_cast<int>(inst->graph.num_streets());
    job->created = job->updated = now_utc();
    {
      std::lock_guard lock(mu);
      char buf[16];
      std::snprintf(buf, sizeof buf, "j%06d", next_job++);
      job->id = buf;
      jobs[job->id] = job;
    }
    persist(*job);
    {
      std::lock_guard lock(mu);
      queue.push_back(job->id);
    }
    cv.notify_one();
    reply(res, 202, {{"job_id", job->id}, {"state", "queued"}});
  }

  void get_frontier(const std::string& id, httplib::Response& res) {
    auto job = find_job(id);
    if (!job) return reply_error(res, 404, "unknown job");
    {
      std::lock_guard lock(mu);
      if (job->state != "done") return reply_error(res, 409, "job is " + job->state);
    }
    const auto rows = frontier_from_csv(read_file(root / "jobs" / id / "frontier.csv"));
    Json list = Json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const ParetoPoint& p = rows[i];
      list.push_back({{"point_index", i},
                      {"bike_time_h", p.bike_time_h},
                      {"car_time_h", p.car_time_h},
                      {"bike_pct", p.bike_pct},
                      {"car_pct", p.car_pct},
                      {"num_bike_streets", p.num_bike_streets},
                      {"gamma", p.provenance.gamma},
                      {"k", p.provenance.k},
                      {"algorithm", p.provenance.algorithm},
                      {"design_file", p.design_file}});
    }
    reply(res, 200, {{"job_id", id}, {"hypervolume", hypervolume(rows)}, {"rows", std::move(list)}});
  }

  void get_design(const std::string& id, const std::string& index, httplib::Response& res) {
    auto job = find_job(id);
    if (!job) return reply_error(res, 404, "unknown job");
    {
      std::lock_guard lock(mu);
      if (job->state != "done") return reply_error(res, 409, "job is " + job->state);
    }
    std::size_t i = 0;
    try {
      std::size_t used = 0;
      i = std::stoul(index, &used);
      if (used != index.size()) throw std::invalid_argument(index);
    } catch (const std::exception&) {
      return reply_error(res, 404, "unknown point index");
    }
    const fs::path file = root / "jobs" / id / design_file_name(i);
    if (!fs::exists(file)) return reply_error(res, 404, "unknown point index");
    res.status = 200;
    res.set_content(read_file(file), "application/json");
  }

  void delete_job(const std::string& id, httplib::Response& res) {
    auto job = find_job(id);
    if (!job) return reply_error(res, 404, "unknown job");
    bool now_failed = false;
    {
      std::lock_guard lock(mu);
      if (job->state == "done" || job->state == "failed") {
        return reply_error(res, 409, "job already " + job->state);
      }
      job->cancel = true;
      if (job->state == "queued") {
        std::erase(queue, id);
        job->state = "failed";
        job->error = "cancelled";
        job->updated = now_utc();
        now_failed = true;
      }
    }
    if (now_failed) persist(*job);
    std::lock_guard lock(mu);
    reply(res, 202, job_json(*job));
  }

  void work() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = jobs.at(queue.front());
        queue.pop_front();
        job->state = "running";
        job->updated = now_utc();
      }
      persist(*job);
      run(*job);
    }
  }

  void run(Job& job) {
    auto inst = find_instance(job.instance_id);
    const fs::path dir = root / "jobs" / job.id;
    std::string error;
    if (!inst) {
      error = "instance disappeared";
    } else {
      auto progress = [&](const RoundingProgress& p) {
        std::lock_guard lock(mu);
        // Several gammas each restart the count; keep the reported value monotone.
        job.iteration += 1;
        job.streets_fixed = std::max(job.streets_fixed, p.streets_fixed);
        job.updated = now_utc();
        return !job.cancel.load();
      };
      RunOutput out = execute_run(job.config, *inst, progress);
      if (out.error.empty()) error = revalidate(out, *inst, job.config);
      if (!error.empty() && out.error.empty()) out.error = error;
      try {
        write_bundle(dir.string(), job.config, *inst, out);
      } catch (const std::exception& e) {
        if (out.error.empty()) out.error = e.what();
      }
      error = out.error;
    }
    {
      std::lock_guard lock(mu);
      job.state = error.empty() ? "done" : "failed";
      job.error = error;
      if (error.empty()) job.streets_fixed = job.total_streets;
      job.updated = now_utc();
    }
    persist(job);
  }

  // Served designs must satisfy the design invariants and every fixed lane.
  static std::string revalidate(const RunOutput& out, const Instance& inst, const RunConfig& c) {
    const LaneDigraph dg(inst.graph);
    for (const ParetoPoint& p : out.result.frontier) {
      const NetworkDesign& d = out.result.designs[p.design_index];
      auto v = design_violations(d, dg);
      if (!v.empty()) return "design check failed: " + v.front();
      for (const FixedLane& f : c.fixed) {
        const StreetAllocation& a = d.streets[*inst.graph.find_street(f.edge_id)];
        const int want = f.mode == LaneMode::kBike ? f.value : 0;
        if (a.bike != want) {
          return "design ignores fixed lane on edge " + std::to_string(f.edge_id);
        }
      }
    }
    return {};
  }

  ServiceOptions options;
  fs::path root;
  httplib::Server server;
  std::thread server_thread;

  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  std::map<std::string, std::shared_ptr<Instance>> instances;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::deque<std::string> queue;
  int next_job = 1;
  std::vector<std::thread> workers;
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) return -1;
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::wait() {
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

void Service::stop() { impl_->shutdown(); }

}  // namespace lanealloc
