#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "autosimp/orchestrator.hpp"

namespace autosimp {

struct BenchProblem {
  std::string name;
  ProblemSpec spec;
};

/// {"name": ..., "problems": [{"name": ..., "spec": {...}}]}; specs are validated on load.
std::vector<BenchProblem> load_suite(const std::string& path);
std::vector<BenchProblem> parse_suite(const nlohmann::json& doc);

struct BenchCell {
  std::string problem;
  ControllerKind controller = ControllerKind::schedule;
  bool pass = false;
  double compliance = 0.0;
  double grayness = 0.0;
  double volume_error = 0.0;
  int attempts = 0;
  double seconds = 0.0;
  std::string error;
};

struct BenchOptions {
  int jobs = 1;
  int retries = 0;
  std::optional<int> max_iterations;
  ControllerOptions controller_options;
};

/// Every (problem, controller) cell, up to `jobs` cells concurrently; output order is
/// problem-major regardless of completion order.
std::vector<BenchCell> run_benchmark(const std::vector<BenchProblem>& problems,
                                     const std::vector<ControllerKind>& controllers, const BenchOptions& options);

nlohmann::ordered_json bench_to_json(const std::vector<BenchCell>& cells);
/// Fixed-width table plus per-controller pass rate and mean compliance.
std::string bench_summary(const std::vector<BenchCell>& cells);

} // namespace autosimp
