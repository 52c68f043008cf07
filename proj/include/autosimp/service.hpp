#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "autosimp/orchestrator.hpp"

namespace autosimp {

enum class JobStatus { queued, running, tail, done, failed };
std::string_view to_string(JobStatus s);

struct ServiceOptions {
  int workers = 0;                // 0 selects the hardware concurrency
  std::size_t queue_limit = 64;   // pending jobs beyond this are refused
  bool autostart = true;          // start workers on construction
  std::shared_ptr<LlmBackend> backend; // null selects the OpenAI-compatible client
  LlmBackendConfig backend_config = LlmBackendConfig::from_env();
};

struct JobRequest {
  ProblemSpec spec;
  RailLog rail_log;
  ControllerKind controller = ControllerKind::schedule;
  int retries = 2;
  int frames_every = 0;
};

/// In-memory job table with a bounded queue and a fixed worker pool.
class JobManager {
public:
  explicit JobManager(ServiceOptions options);
  ~JobManager();
  JobManager(const JobManager&) = delete;
  JobManager& operator=(const JobManager&) = delete;

  void start();
  void stop();

  /// Job id, or nullopt when the queue is full.
  std::optional<std::string> submit(JobRequest request);
  /// Status document, nullopt for an unknown id.
  std::optional<nlohmann::ordered_json> status(const std::string& id) const;

  enum class ResultState { unknown, pending, ready };
  ResultState result(const std::string& id, nlohmann::ordered_json& out) const;

  /// Blocks until the job is done or failed; false for an unknown id.
  bool wait(const std::string& id) const;

  const ServiceOptions& options() const { return options_; }
  LlmBackend& backend() { return *backend_; }

private:
  struct Job;
  void worker_loop();
  void execute(Job& job);

  ServiceOptions options_;
  std::shared_ptr<LlmBackend> backend_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  mutable std::condition_variable done_cv_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
  std::uint64_t counter_ = 0;
};

/// HTTP front end: /api/configure, /api/solve, /api/jobs/{id}, /api/jobs/{id}/result, /api/evaluate.
class ApiServer {
public:
  explicit ApiServer(ServiceOptions options = {});
  ~ApiServer();

  /// Binds to `port` (0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  bool listen();
  void stop();

  JobManager& jobs() { return jobs_; }

private:
  struct Impl;
  JobManager jobs_;
  std::unique_ptr<Impl> impl_;
};

} // namespace autosimp
