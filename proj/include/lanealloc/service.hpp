#pragma once

#include <memory>
#include <string>

namespace lanealloc {

struct ServiceOptions {
  // Instances and job bundles live below this directory.
  std::string storage_dir = "lanealloc-data";
  // Jobs running at the same time.
  int workers = 2;
};

/// HTTP front end for instances, optimization jobs and their results.
///
///   POST   /instances                      {graph, od | od_csv, aux_seed}
///   GET    /instances/{id}
///   POST   /jobs                           {instance_id, gammas, k, eta,
///                                           fixed_lanes, algorithm}
///   GET    /jobs/{id}
///   GET    /jobs/{id}/frontier
///   GET    /jobs/{id}/designs/{point_index}
///   DELETE /jobs/{id}
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Returns the bound port, or -1 when binding failed.
  int start(const std::string& host, int port);
  /// Blocks until stop() is called.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lanealloc
