// lanealloc: generate instances, run allocators, compare frontiers, serve.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "lanealloc/generator.hpp"
#include "lanealloc/runner.hpp"
#include "lanealloc/service.hpp"

namespace fs = std::filesystem;
using namespace lanealloc;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitInternal = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

struct GenFlags {
  int n = 20;
  std::uint64_t seed = 0;
  double od_fraction = 0.1;
};

void add_gen_flags(CLI::App* cmd, GenFlags& g) {
  cmd->add_option("--n", g.n, "Number of nodes")->check(CLI::Range(3, 100000));
  cmd->add_option("--seed", g.seed, "Random seed");
  cmd->add_option("--od-fraction", g.od_fraction, "Demand pairs as a fraction of n^2");
}

Instance generate_instance(const GenFlags& f) {
  if (!(f.od_fraction > 0.0) || f.od_fraction > 1.0) {
    throw UsageError("--od-fraction must lie in (0, 1]");
  }
  GenParams params;
  params.n = f.n;
  params.seed = f.seed;
  StreetGraph g = generate_synthetic(params);
  OdMatrix od;
  try {
    od = sample_od(g, f.od_fraction, substream_seed(f.seed, "od"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  od = extend_with_aux(od, g, substream_seed(f.seed, "aux"));
  return make_instance(std::move(g), std::move(od));
}

void print_stats(const Instance& inst) {
  const InstanceStats st = instance_stats(inst);
  std::printf("%-8s %-8s %-8s %-10s %-18s %s\n", "nodes", "streets", "lanes", "od_paths",
              "od_paths_extended", "instance_hash");
  std::printf("%-8zu %-8zu %-8d %-10zu %-18zu %s\n", st.nodes, st.streets, st.lanes, st.od_paths,
              st.od_paths_extended, inst.hash().c_str());
}

// "12:bike", "12:bike:1", "40:car"
FixedLane parse_fixed(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() < 2 || parts.size() > 3) {
    throw UsageError("--fixed expects edge_id:bike|car[:value], got '" + text + "'");
  }
  FixedLane f;
  try {
    f.edge_id = std::stoll(parts[0]);
    if (parts.size() == 3) f.value = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("--fixed: bad number in '" + text + "'");
  }
  if (parts[1] == "bike") {
    f.mode = LaneMode::kBike;
  } else if (parts[1] == "car") {
    f.mode = LaneMode::kCar;
  } else {
    throw UsageError("--fixed: mode must be bike or car in '" + text + "'");
  }
  return f;
}

struct Frontier {
  std::string label;
  std::string algorithm;
  std::string instance_hash;
  std::vector<ParetoPoint> points;
};

Frontier load_frontier(const std::string& arg) {
  fs::path csv = arg;
  if (fs::is_directory(csv)) csv /= "frontier.csv";
  if (!fs::exists(csv)) throw UsageError("no frontier at " + arg);
  const fs::path manifest = csv.parent_path() / "manifest.json";
  if (!fs::exists(manifest)) {
    throw UsageError("no manifest.json next to " + csv.string() + "; cannot check the instance");
  }
  const Json m = Json::parse(read_file(manifest));
  Frontier f;
  f.label = arg;
  f.algorithm = m.at("config").at("algorithm").get<std::string>();
  f.instance_hash = m.at("instance_hash").get<std::string>();
  f.points = frontier_from_csv(read_file(csv));
  return f;
}

int cmd_compare(const std::vector<std::string>& inputs, const std::string& out_path) {
  if (inputs.size() < 2) throw UsageError("compare needs at least two frontiers");
  std::vector<Frontier> fs_;
  for (const auto& in : inputs) fs_.push_back(load_frontier(in));
  for (const auto& f : fs_) {
    if (f.instance_hash != fs_.front().instance_hash) {
      std::fprintf(stderr, "error: %s was computed on instance %s, %s on %s\n", f.label.c_str(),
                   f.instance_hash.c_str(), fs_.front().label.c_str(),
                   fs_.front().instance_hash.c_str());
      return kExitInvalid;
    }
  }

  std::vector<double> hi;
  for (const auto& f : fs_) hi.push_back(hypervolume(f.points));
  std::vector<std::size_t> rank(fs_.size());
  for (std::size_t i = 0; i < rank.size(); ++i) rank[i] = i;
  std::stable_sort(rank.begin(), rank.end(), [&](auto a, auto b) { return hi[a] > hi[b]; });

  Json report;
  report["instance_hash"] = fs_.front().instance_hash;
  std::printf("instance %s\n\n%-4s %-14s %-8s %12s  %s\n", fs_.front().instance_hash.c_str(), "rank",
              "algorithm", "points", "HI", "source");
  for (std::size_t r = 0; r < rank.size(); ++r) {
    const Frontier& f = fs_[rank[r]];
    std::printf("%-4zu %-14s %-8zu %12.3f  %s\n", r + 1, f.algorithm.c_str(), f.points.size(),
                hi[rank[r]], f.label.c_str());
    report["frontiers"].push_back({{"rank", r + 1},
                                   {"source", f.label},
                                   {"algorithm", f.algorithm},
                                   {"points", f.points.size()},
                                   {"hypervolume", hi[rank[r]]}});
  }

  std::printf("\npairwise HI gap (row vs column, %%)\n%-14s", "");
  for (const auto& f : fs_) std::printf(" %12s", f.algorithm.c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < fs_.size(); ++i) {
    std::printf("%-14s", fs_[i].algorithm.c_str());
    for (std::size_t j = 0; j < fs_.size(); ++j) {
      if (hi[j] > 0.0) {
        const double gap = hi_gap_pct(hi[i], hi[j]);
        std::printf(" %12.2f", gap);
        if (i != j) {
          report["pairwise"].push_back(
              {{"a", fs_[i].label}, {"b", fs_[j].label}, {"gap_pct", gap}});
        }
      } else {
        std::printf(" %12s", "-");
      }
    }
    std::printf("\n");
  }

  const auto oracle = std::find_if(fs_.begin(), fs_.end(),
                                   [](const Frontier& f) { return f.algorithm == "oracle"; });
  if (oracle != fs_.end()) {
    const double ohi = hypervolume(oracle->points);
    std::printf("\nnearest-subset gap vs oracle (HI %.3f)\n", ohi);
    for (const auto& f : fs_) {
      if (&f == &*oracle) continue;
      const double shi = hypervolume(nearest_subset(f.points, oracle->points));
      const double gap = ohi > 0.0 ? hi_gap_pct(shi, ohi) : 0.0;
      std::printf("%-14s subset HI %12.3f  gap %8.3f%%\n", f.algorithm.c_str(), shi, gap);
      report["oracle_gaps"].push_back(
          {{"source", f.label}, {"subset_hypervolume", shi}, {"hi_gap_pct", gap}});
    }
  }
  if (!out_path.empty()) write_file(out_path, report.dump(1) + "\n");
  return kExitOk;
}

int cmd_serve(const std::string& host, int port, const std::string& storage, int workers) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(ServiceOptions{storage, workers});
  const int bound = service.start(host, port);
  if (bound < 0) {
    std::fprintf(stderr, "error: cannot bind %s:%d\n", host.c_str(), port);
    return kExitInternal;
  }
  std::printf("listening on http://%s:%d (storage %s)\n", host.c_str(), bound, storage.c_str());
  std::fflush(stdout);
  int sig = 0;
  sigwait(&signals, &sig);
  service.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bike and car lane allocation on street networks"};
  app.require_subcommand(1);

  GenFlags gen;
  std::string gen_out = ".";
  auto* generate = app.add_subcommand("generate", "Write a synthetic graph.json and od.csv");
  add_gen_flags(generate, gen);
  generate->add_option("--out", gen_out, "Output directory");

  GenFlags run_gen;
  std::string graph_path, od_path, run_out = "run", algorithm = "optimize";
  std::vector<double> gammas{1.0, 2.0, 4.0, 8.0};
  int k = 50;
  std::optional<int> eta;
  std::vector<std::string> fixed;
  double td_speed = 10.0;
  auto* run = app.add_subcommand("run", "Run an allocator and write a result bundle");
  auto* graph_opt = run->add_option("--graph", graph_path, "Graph JSON")->check(CLI::ExistingFile);
  auto* od_opt = run->add_option("--od", od_path, "OD CSV")->check(CLI::ExistingFile);
  graph_opt->needs(od_opt);
  od_opt->needs(graph_opt);
  add_gen_flags(run, run_gen);
  for (const char* name : {"--n", "--od-fraction"}) run->get_option(name)->excludes(graph_opt);
  run->add_option("--algorithm", algorithm,
                  "optimize, top_down, bottom_up_car, bottom_up_bike or oracle");
  run->add_option("--gamma", gammas, "Car weights, comma separated")->delimiter(',');
  run->add_option("--k", k, "Streets fixed between LP solves");
  run->add_option("--eta", eta, "Neighbourhood size for the restricted LP");
  run->add_option("--fixed", fixed, "Fixed lanes edge_id:bike|car[:value]")->delimiter(',');
  run->add_option("--top-down-car-speed", td_speed, "Car speed on bike streets for top_down");
  run->add_option("--out", run_out, "Bundle directory");

  std::vector<std::string> inputs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare frontiers computed on one instance");
  compare->add_option("inputs", inputs, "Run directories or frontier.csv files")->required();
  compare->add_option("--out", compare_out, "Also write the report as JSON");

  std::string host = "127.0.0.1", storage = "lanealloc-data";
  int port = 8080, workers = 2;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--storage", storage, "Storage directory");
  serve->add_option("--workers", workers, "Concurrent jobs")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*generate) {
      const Instance inst = generate_instance(gen);
      write_file(fs::path(gen_out) / "graph.json", inst.graph_text);
      write_file(fs::path(gen_out) / "od.csv", inst.od_text);
      print_stats(inst);
      return kExitOk;
    }
    if (*run) {
      RunConfig config;
      try {
        config.algorithm = algorithm_from_string(algorithm);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      config.gammas = gammas;
      config.k = k;
      config.eta = eta;
      config.seed = run_gen.seed;
      config.top_down_car_speed_kmh = td_speed;
      for (const auto& f : fixed) config.fixed.push_back(parse_fixed(f));

      const Instance inst = graph_path.empty() ? generate_instance(run_gen)
                                               : load_instance(graph_path, od_path);
      const auto violations = check_config(config, inst.graph);
      if (!violations.empty()) {
        bool instance_side = false;
        for (const auto& v : violations) {
          std::fprintf(stderr, "error: %s%s: %s\n", v.field.c_str(),
                       v.edge_id ? (" (edge " + std::to_string(*v.edge_id) + ")").c_str() : "",
                       v.reason.c_str());
          instance_side = instance_side || v.field == "fixed_lanes";
        }
        return instance_side ? kExitInvalid : kExitUsage;
      }
      print_stats(inst);
      const bool tty = isatty(2);
      const RunOutput out = execute_run(config, inst, [tty](const RoundingProgress& p) {
        if (tty) std::fprintf(stderr, "\rgamma %g  iteration %d  fixed %d/%d   ", p.gamma, p.iteration,
                     p.streets_fixed, p.total_streets);
        return true;
      });
      if (tty) std::fprintf(stderr, "\n");
      write_bundle(run_out, config, inst, out);
      std::printf("%zu designs, %zu on the frontier, HI %.3f, %.2f s -> %s\n",
                  out.result.points.size(), out.result.frontier.size(),
                  hypervolume(out.result.frontier), out.wall_seconds, run_out.c_str());
      if (!out.error.empty()) {
        std::fprintf(stderr, "error: %s\n", out.error.c_str());
        return kExitInternal;
      }
      return kExitOk;
    }
    if (*compare) return cmd_compare(inputs, compare_out);
    if (*serve) return cmd_serve(host, port, storage, workers);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const InvalidInstance& e) {
    std::fprintf(stderr, "invalid instance: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
