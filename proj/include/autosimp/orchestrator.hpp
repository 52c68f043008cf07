#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "autosimp/configurator.hpp"
#include "autosimp/controllers.hpp"
#include "autosimp/evaluator.hpp"
#include "autosimp/simp_solver.hpp"

namespace autosimp {

struct AttemptRecord {
  int index = 0;
  ProblemSpec spec;                 // working spec for this attempt
  std::optional<RerunHint> applied; // hint that produced `spec`, none for the first attempt
  EvaluationReport report;
  double compliance = std::numeric_limits<double>::infinity();
  SolveHistory history;
  std::string error; // solver error text; empty when the solve completed
  double solve_seconds = 0.0;
};

struct RunReport {
  ProblemSpec original_spec;
  RailLog rail_log;
  ControllerKind controller = ControllerKind::schedule;
  std::vector<AttemptRecord> attempts;
  int best_attempt = -1; // index of the attempt holding density/compliance
  std::vector<double> density;
  double compliance = std::numeric_limits<double>::infinity();
  bool pass = false;
  double configure_seconds = 0.0;
  double total_seconds = 0.0;

  const EvaluationReport* final_report() const { return attempts.empty() ? nullptr : &attempts.back().report; }
  std::vector<RerunHint> hints() const;
};

struct RunOptions {
  ControllerKind controller = ControllerKind::schedule;
  int retries = 2;
  ControllerOptions controller_options;
  SolveOptions solve;
  /// Test hook: may rewrite an attempt's report before pass/hint decisions (hint is recomputed).
  std::function<void(int attempt, EvaluationReport&)> evaluation_override;
  std::function<void(int attempt, const ProblemSpec&)> on_attempt;
};

/// Solve, evaluate and retry from a validated spec; best-compliance tracking across attempts.
RunReport run_from_spec(const ProblemSpec& spec, const RunOptions& options, RailLog rail_log = {});

/// Configure once, then run_from_spec. CONFIGURE_FAILED propagates before any solve.
RunReport run_pipeline(std::string_view prompt, LlmBackend* backend, const LlmBackendConfig& config,
                       const RunOptions& options);

/// Shared by the CLI and the service: strict parse, optional iteration override, validation.
ValidatedSpec prepare_spec(const nlohmann::json& spec_json, std::optional<int> max_iterations = std::nullopt);

nlohmann::ordered_json history_to_json(const SolveHistory& history);
SolveHistory history_from_json(const nlohmann::json& j);

/// Result document. Timings are the only run-dependent content and can be omitted.
nlohmann::ordered_json result_to_json(const RunReport& report, bool include_timings = true);
std::string result_document(const RunReport& report, bool include_timings = true);

/// Re-evaluate a stored result document (spec, density and history of its best attempt).
EvaluationReport evaluate_result_document(const nlohmann::json& doc);

} // namespace autosimp
