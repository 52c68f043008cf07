#include "autosimp/orchestrator.hpp"

#include <chrono>
#include <cmath>

#include "autosimp/bc_generator.hpp"
#include "autosimp/errors.hpp"
#include "autosimp/spec_json.hpp"

namespace autosimp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ProblemSpec revalidate(const ProblemSpec& spec, RailLog& log) {
  ValidatedSpec v = validate_spec(spec);
  for (auto& e : v.log)
    if (e.action != RailAction::warned) log.push_back(e);
  return v.spec;
}

} // namespace

std::vector<RerunHint> RunReport::hints() const {
  std::vector<RerunHint> out;
  for (const auto& a : attempts)
    if (a.applied) out.push_back(*a.applied);
  return out;
}

RunReport run_from_spec(const ProblemSpec& spec, const RunOptions& options, RailLog rail_log) {
  if (options.retries < 0) throw Error(ErrorCode::invalid_argument, "retries must be >= 0");
  const auto t0 = Clock::now();
  RunReport report;
  report.original_spec = spec;
  report.rail_log = std::move(rail_log);
  report.controller = options.controller;

  ProblemSpec working = spec;
  std::optional<RerunHint> pending;
  for (int r = 0; r <= options.retries; ++r) {
    AttemptRecord attempt;
    attempt.index = r;
    attempt.applied = pending;
    attempt.spec = working;
    if (options.on_attempt) options.on_attempt(r, working);

    const SolverArrays arrays = generate_bc(working);
    const auto ts = Clock::now();
    try {
      auto controller = make_controller(options.controller, options.controller_options);
      SolveResult result = solve(working, arrays, *controller, options.solve);
      attempt.compliance = result.compliance;
      attempt.history = std::move(result.history);
      attempt.report = evaluate(result.density, working, arrays, &attempt.history);
      if (attempt.compliance < report.compliance) {
        report.compliance = attempt.compliance;
        report.density = std::move(result.density);
        report.best_attempt = r;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::singular_system && e.code() != ErrorCode::bisection_failed) throw;
      attempt.error = e.what();
      attempt.report = EvaluationReport{};
      attempt.report.hint = RerunHint{"default", static_cast<int>(std::ceil(kRetryGrowth * working.solve.max_iterations - 1e-9)), std::nullopt};
    }
    attempt.solve_seconds = seconds_since(ts);

    if (attempt.error.empty() && options.evaluation_override) {
      options.evaluation_override(r, attempt.report);
      finalize_report(attempt.report, working);
    }

    const bool passed = attempt.error.empty() && attempt.report.pass;
    pending = attempt.report.hint;
    report.attempts.push_back(std::move(attempt));
    if (passed) {
      report.pass = true;
      break;
    }
    if (r < options.retries && pending) working = revalidate(apply_hint(working, *pending), report.rail_log);
  }
  report.total_seconds = seconds_since(t0);
  return report;
}

RunReport run_pipeline(std::string_view prompt, LlmBackend* backend, const LlmBackendConfig& config,
                       const RunOptions& options) {
  const auto t0 = Clock::now();
  ConfigureResult cfg = configure(prompt, backend, config);
  const double configure_seconds = seconds_since(t0);
  RunReport report = run_from_spec(cfg.spec, options, std::move(cfg.log));
  report.configure_seconds = configure_seconds;
  report.total_seconds = seconds_since(t0);
  return report;
}

ValidatedSpec prepare_spec(const nlohmann::json& spec_json, std::optional<int> max_iterations) {
  SpecCandidate candidate = candidate_from_json(spec_json);
  if (max_iterations) {
    SolveSettings solve = candidate.solve.value_or(SolveSettings{});
    solve.max_iterations = *max_iterations;
    candidate.solve = solve;
  }
  return validate_spec(candidate);
}

nlohmann::ordered_json history_to_json(const SolveHistory& h) {
  nlohmann::ordered_json j;
  auto& recs = j["records"] = nlohmann::ordered_json::array();
  for (const auto& r : h.records)
    recs.push_back({{"iteration", r.iteration},
                    {"phase", to_string(r.phase)},
                    {"compliance", r.compliance},
                    {"volume", r.volume},
                    {"grayness", r.grayness},
                    {"change", r.change},
                    {"p", r.params.p},
                    {"beta", r.params.beta},
                    {"r_min", r.params.r_min},
                    {"delta", r.params.delta}});
  auto snap = [](const std::optional<DensitySnapshot>& s) {
    return s ? nlohmann::ordered_json{{"iteration", s->iteration}, {"compliance", s->compliance}}
             : nlohmann::ordered_json(nullptr);
  };
  j["best_valid"] = snap(h.best_valid);
  j["best_overall"] = snap(h.best_overall);
  j["main_iterations"] = h.main_iterations;
  j["early_exit"] = h.early_exit;
  j["functional_convergence"] = h.functional_convergence;
  j["tail_start"] = h.tail_start == TailStart::none ? "none"
                    : h.tail_start == TailStart::best_valid ? "best_valid"
                                                             : "uniform";
  return j;
}

SolveHistory history_from_json(const nlohmann::json& j) {
  SolveHistory h;
  try {
    for (const auto& r : j.at("records")) {
      IterationRecord rec;
      rec.iteration = r.at("iteration").get<int>();
      rec.phase = r.at("phase").get<std::string>() == "tail" ? Phase::tail : Phase::main;
      rec.compliance = r.at("compliance").get<double>();
      rec.volume = r.value("volume", 0.0);
      rec.grayness = r.value("grayness", 0.0);
      rec.change = r.value("change", 0.0);
      rec.params.p = r.value("p", 0.0);
      rec.params.beta = r.value("beta", 0.0);
      rec.params.r_min = r.value("r_min", 0.0);
      rec.params.delta = r.value("delta", 0.0);
      h.records.push_back(rec);
    }
    auto snap = [&](const char* key) -> std::optional<DensitySnapshot> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return DensitySnapshot{{}, j.at(key).at("compliance").get<double>(), j.at(key).at("iteration").get<int>()};
    };
    h.best_valid = snap("best_valid");
    h.best_overall = snap("best_overall");
    h.main_iterations = j.value("main_iterations", 0);
    h.early_exit = j.value("early_exit", false);
    h.functional_convergence = j.value("functional_convergence", false);
    const std::string ts = j.value("tail_start", std::string("none"));
    h.tail_start = ts == "best_valid" ? TailStart::best_valid : ts == "uniform" ? TailStart::uniform : TailStart::none;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("history: ") + e.what());
  }
  return h;
}

nlohmann::ordered_json result_to_json(const RunReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  j["spec"] = spec_to_json(report.original_spec);
  j["controller"] = to_string(report.controller);
  j["pass"] = report.pass;
  j["compliance"] = report.best_attempt >= 0 ? nlohmann::ordered_json(report.compliance) : nlohmann::ordered_json(nullptr);
  j["attempts_used"] = report.attempts.size();
  j["best_attempt"] = report.best_attempt;
  j["rail_log"] = rail_log_to_json(report.rail_log);
  auto& hints = j["hints"] = nlohmann::ordered_json::array();
  for (const auto& h : report.hints()) hints.push_back(hint_to_json(h));
  j["evaluation"] = report.final_report() ? report_to_json(*report.final_report()) : nlohmann::ordered_json(nullptr);

  auto& attempts = j["attempts"] = nlohmann::ordered_json::array();
  for (const auto& a : report.attempts) {
    nlohmann::ordered_json aj;
    aj["index"] = a.index;
    aj["spec"] = spec_to_json(a.spec);
    aj["hint_applied"] = a.applied ? hint_to_json(*a.applied) : nlohmann::ordered_json(nullptr);
    aj["compliance"] = a.error.empty() ? nlohmann::ordered_json(a.compliance) : nlohmann::ordered_json(nullptr);
    aj["error"] = a.error.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(a.error);
    aj["evaluation"] = report_to_json(a.report);
    aj["history"] = history_to_json(a.history);
    attempts.push_back(std::move(aj));
  }

  const ProblemSpec& final_spec =
      report.best_attempt >= 0 ? report.attempts[report.best_attempt].spec : report.original_spec;
  j["mesh"] = {{"nx", final_spec.mesh.nx}, {"ny", final_spec.mesh.ny}};
  if (final_spec.mesh.nz) j["mesh"]["nz"] = *final_spec.mesh.nz;
  j["density"] = report.density;
  if (include_timings) {
    nlohmann::ordered_json t;
    t["configure_seconds"] = report.configure_seconds;
    auto& per = t["attempt_seconds"] = nlohmann::ordered_json::array();
    for (const auto& a : report.attempts) per.push_back(a.solve_seconds);
    t["total_seconds"] = report.total_seconds;
    j["timings"] = t;
  }
  return j;
}

std::string result_document(const RunReport& report, bool include_timings) {
  return result_to_json(report, include_timings).dump(2) + "\n";
}

EvaluationReport evaluate_result_document(const nlohmann::json& doc) {
  try {
    const int best = doc.at("best_attempt").get<int>();
    if (best < 0) throw Error(ErrorCode::invalid_argument, "result has no completed attempt");
    const auto& attempt = doc.at("attempts").at(static_cast<std::size_t>(best));
    const ProblemSpec spec = validate_spec(candidate_from_json(attempt.at("spec"))).spec;
    const auto density = doc.at("density").get<std::vector<double>>();
    const SolverArrays arrays = generate_bc(spec);
    if (density.size() != arrays.passive_mask.size())
      throw Error(ErrorCode::invalid_argument, "density length does not match the mesh");
    const SolveHistory history = history_from_json(attempt.at("history"));
    return evaluate(density, spec, arrays, &history);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("result document: ") + e.what());
  }
}

} // namespace autosimp
