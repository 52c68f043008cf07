#include "autosimp/service.hpp"

#include <random>

#include <httplib.h>

#include "autosimp/errors.hpp"
#include "autosimp/frame_codec.hpp"
#include "autosimp/spec_json.hpp"

namespace autosimp {

std::string_view to_string(JobStatus s) {
  switch (s) {
  case JobStatus::queued: return "queued";
  case JobStatus::running: return "running";
  case JobStatus::tail: return "tail";
  case JobStatus::done: return "done";
  case JobStatus::failed: return "failed";
  }
  return "unknown";
}

struct JobManager::Job {
  std::string id;
  JobRequest request;
  JobStatus status = JobStatus::queued;
  int attempt = 0;
  nlohmann::ordered_json progress; // null until the first iteration
  nlohmann::ordered_json frame;
  nlohmann::ordered_json result;
  std::string error;
};

JobManager::JobManager(ServiceOptions options) : options_(std::move(options)) {
  backend_ = options_.backend ? options_.backend : std::make_shared<OpenAiCompatibleBackend>();
  if (options_.autostart) start();
}

JobManager::~JobManager() { stop(); }

void JobManager::start() {
  std::lock_guard lock(mu_);
  if (!workers_.empty()) return;
  stopping_ = false;
  int n = options_.workers > 0 ? options_.workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, n);
  for (int i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

void JobManager::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

std::optional<std::string> JobManager::submit(JobRequest request) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu_);
  if (queue_.size() >= options_.queue_limit) return std::nullopt;
  auto job = std::make_shared<Job>();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%06llx%010llx", static_cast<unsigned long long>(++counter_),
                static_cast<unsigned long long>(rng() & 0xffffffffffull));
  job->id = buf;
  job->request = std::move(request);
  jobs_[job->id] = job;
  queue_.push_back(job);
  cv_.notify_one();
  return job->id;
}

void JobManager::worker_loop() {
  while (true) {
    std::shared_ptr<Job> job;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      job = queue_.front();
      queue_.pop_front();
      job->status = JobStatus::running;
    }
    execute(*job);
    done_cv_.notify_all();
  }
}

void JobManager::execute(Job& job) {
  const JobRequest& req = job.request;
  const Mesh mesh = Mesh::from_spec(req.spec);
  RunOptions ro;
  ro.controller = req.controller;
  ro.retries = req.retries;
  ro.controller_options.backend = backend_;
  ro.controller_options.backend_config = options_.backend_config;
  ro.solve.frames_every = req.frames_every;
  ro.on_attempt = [&](int attempt, const ProblemSpec&) {
    std::lock_guard lock(mu_);
    job.attempt = attempt;
  };
  ro.solve.on_progress = [&](const ProgressFrame& f) {
    nlohmann::ordered_json p;
    p["attempt"] = job.attempt;
    p["iteration"] = f.iteration;
    p["phase"] = to_string(f.phase);
    p["compliance"] = f.compliance;
    p["volume"] = f.volume;
    p["grayness"] = f.grayness;
    p["change"] = f.change;
    p["params"] = {{"p", f.params.p}, {"beta", f.params.beta}, {"r_min", f.params.r_min}, {"delta", f.params.delta}};
    nlohmann::ordered_json frame;
    if (f.density) frame = frame_to_json(f.iteration, *f.density, mesh);
    std::lock_guard lock(mu_);
    job.progress = std::move(p);
    if (f.density) job.frame = std::move(frame);
    if (f.phase == Phase::tail) job.status = JobStatus::tail;
  };

  try {
    const RunReport report = run_from_spec(req.spec, ro, req.rail_log);
    auto doc = result_to_json(report);
    std::lock_guard lock(mu_);
    job.result = std::move(doc);
    job.status = JobStatus::done;
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    job.error = e.what();
    job.status = JobStatus::failed;
  }
}

std::optional<nlohmann::ordered_json> JobManager::status(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  const Job& job = *it->second;
  nlohmann::ordered_json j;
  j["job_id"] = job.id;
  j["status"] = to_string(job.status);
  j["controller"] = to_string(job.request.controller);
  j["attempt"] = job.attempt;
  j["progress"] = job.progress;
  j["frame"] = job.frame;
  j["error"] = job.error.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(job.error);
  return j;
}

JobManager::ResultState JobManager::result(const std::string& id, nlohmann::ordered_json& out) const {
  std::lock_guard lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return ResultState::unknown;
  const Job& job = *it->second;
  if (job.status == JobStatus::done) {
    out = job.result;
    return ResultState::ready;
  }
  if (job.status == JobStatus::failed) {
    out = {{"job_id", job.id}, {"status", "failed"}, {"error", job.error}};
    return ResultState::ready;
  }
  return ResultState::pending;
}

bool JobManager::wait(const std::string& id) const {
  std::unique_lock lock(mu_);
  const auto it = jobs_.find(id);
  if (it == jobs_.end()) return false;
  const auto job = it->second;
  done_cv_.wait(lock, [&] { return job->status == JobStatus::done || job->status == JobStatus::failed; });
  return true;
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) {
      send_error(res, 400, "PARSE_ERROR", "request body must be a JSON object");
      return std::nullopt;
    }
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    send_error(res, 400, "PARSE_ERROR", e.what());
    return std::nullopt;
  }
}

LlmBackendConfig backend_overrides(LlmBackendConfig cfg, const nlohmann::json& body) {
  if (!body.contains("backend") || !body.at("backend").is_object()) return cfg;
  const auto& b = body.at("backend");
  if (b.contains("base_url")) cfg.base_url = b.at("base_url").get<std::string>();
  if (b.contains("model")) cfg.model_name = b.at("model").get<std::string>();
  if (b.contains("model_name")) cfg.model_name = b.at("model_name").get<std::string>();
  if (b.contains("api_key_ref")) cfg.api_key_ref = b.at("api_key_ref").get<std::string>();
  if (b.contains("timeout_seconds")) cfg.timeout_seconds = b.at("timeout_seconds").get<double>();
  return cfg;
}

} // namespace

struct ApiServer::Impl {
  httplib::Server server;
};

ApiServer::ApiServer(ServiceOptions options) : jobs_(std::move(options)), impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Post("/api/configure", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    const std::string prompt = body->value("prompt", std::string());
    try {
      const LlmBackendConfig cfg = backend_overrides(jobs_.options().backend_config, *body);
      const ConfigureResult r = configure(prompt, &jobs_.backend(), cfg);
      send_json(res, 200,
                {{"spec", spec_to_json(r.spec)}, {"rail_log", rail_log_to_json(r.log)}, {"used_fallback", r.used_fallback}});
    } catch (const Error& e) {
      const std::string msg = e.what();
      const bool unreachable = msg.find("LLM path: backend:") != std::string::npos;
      send_error(res, unreachable ? 502 : 422, error_code_name(e.code()), msg);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "PARSE_ERROR", e.what());
    }
  });

  srv.Post("/api/solve", [this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    JobRequest jr;
    try {
      if (!body->contains("spec")) throw Error(ErrorCode::parse_error, "/spec: missing");
      std::optional<int> iters;
      if (body->contains("max_iterations")) iters = body->at("max_iterations").get<int>();
      ValidatedSpec v = prepare_spec(body->at("spec"), iters);
      jr.spec = std::move(v.spec);
      jr.rail_log = std::move(v.log);
      const std::string kind = body->value("controller", std::string("schedule"));
      const auto ck = parse_controller_kind(kind);
      if (!ck) throw Error(ErrorCode::invalid_argument, "unknown controller: " + kind);
      jr.controller = *ck;
      jr.retries = body->value("retries", 2);
      jr.frames_every = body->value("frames_every", 0);
      if (jr.retries < 0 || jr.frames_every < 0)
        throw Error(ErrorCode::invalid_argument, "retries and frames_every must be >= 0");
    } catch (const Error& e) {
      send_error(res, 400, error_code_name(e.code()), e.what());
      return;
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "PARSE_ERROR", e.what());
      return;
    }
    const auto id = jobs_.submit(std::move(jr));
    if (!id) {
      send_error(res, 429, "QUEUE_FULL", "job queue is full");
      return;
    }
    send_json(res, 202, {{"job_id", *id}});
  });

  srv.Get(R"(/api/jobs/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto st = jobs_.status(req.matches[1].str());
    if (!st) return send_error(res, 404, "NOT_FOUND", "unknown job id");
    send_json(res, 200, *st);
  });

  srv.Get(R"(/api/jobs/([0-9a-f]+)/result)", [this](const httplib::Request& req, httplib::Response& res) {
    nlohmann::ordered_json out;
    switch (jobs_.result(req.matches[1].str(), out)) {
    case JobManager::ResultState::unknown: return send_error(res, 404, "NOT_FOUND", "unknown job id");
    case JobManager::ResultState::pending: return send_error(res, 409, "NOT_READY", "job has not finished");
    case JobManager::ResultState::ready: return send_json(res, 200, out);
    }
  });

  srv.Post("/api/evaluate", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req, res);
    if (!body) return;
    try {
      if (!body->contains("spec") || !body->contains("density"))
        throw Error(ErrorCode::parse_error, "body requires spec and density");
      const ProblemSpec spec = prepare_spec(body->at("spec")).spec;
      const auto density = body->at("density").get<std::vector<double>>();
      const SolverArrays arrays = generate_bc(spec);
      if (density.size() != arrays.passive_mask.size())
        throw Error(ErrorCode::invalid_argument, "density has " + std::to_string(density.size()) +
                                                     " entries, mesh has " +
                                                     std::to_string(arrays.passive_mask.size()));
      std::optional<SolveHistory> history;
      if (body->contains("history") && !body->at("history").is_null())
        history = history_from_json(body->at("history"));
      const EvaluationReport r = evaluate(density, spec, arrays, history ? &*history : nullptr);
      send_json(res, 200, report_to_json(r));
    } catch (const Error& e) {
      send_error(res, 400, error_code_name(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "PARSE_ERROR", e.what());
    }
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return impl_->server.listen_after_bind(); }

void ApiServer::stop() {
  if (impl_) impl_->server.stop();
}

} // namespace autosimp
