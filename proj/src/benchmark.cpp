#include "autosimp/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "autosimp/errors.hpp"

namespace autosimp {

std::vector<BenchProblem> parse_suite(const nlohmann::json& doc) {
  std::vector<BenchProblem> out;
  try {
    for (const auto& p : doc.at("problems")) {
      BenchProblem bp;
      bp.name = p.at("name").get<std::string>();
      bp.spec = prepare_spec(p.at("spec")).spec;
      out.push_back(std::move(bp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("suite: ") + e.what());
  }
  return out;
}

std::vector<BenchProblem> load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open suite: " + path);
  try {
    return parse_suite(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse_error, path + ": " + e.what());
  }
}

std::vector<BenchCell> run_benchmark(const std::vector<BenchProblem>& problems,
                                     const std::vector<ControllerKind>& controllers, const BenchOptions& options) {
  std::vector<BenchCell> cells(problems.size() * controllers.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& problem = problems[i / controllers.size()];
      BenchCell& cell = cells[i];
      cell.problem = problem.name;
      cell.controller = controllers[i % controllers.size()];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        ProblemSpec spec = problem.spec;
        if (options.max_iterations) spec.solve.max_iterations = *options.max_iterations;
        RunOptions ro;
        ro.controller = cell.controller;
        ro.retries = options.retries;
        ro.controller_options = options.controller_options;
        const RunReport report = run_from_spec(spec, ro);
        cell.pass = report.pass;
        cell.compliance = report.compliance;
        cell.attempts = static_cast<int>(report.attempts.size());
        if (const auto* ev = report.final_report()) {
          cell.grayness = ev->grayness.value;
          cell.volume_error = ev->volume_error.value;
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return cells;
}

nlohmann::ordered_json bench_to_json(const std::vector<BenchCell>& cells) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    nlohmann::ordered_json j;
    j["problem"] = c.problem;
    j["controller"] = to_string(c.controller);
    j["pass"] = c.pass;
    j["compliance"] = c.compliance;
    j["grayness"] = c.grayness;
    j["volume_error"] = c.volume_error;
    j["attempts"] = c.attempts;
    j["seconds"] = c.seconds;
    j["error"] = c.error.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.error);
    arr.push_back(std::move(j));
  }
  return {{"cells", arr}};
}

std::string bench_summary(const std::vector<BenchCell>& cells) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-12s %5s %12s %9s %8s\n", "problem", "controller", "pass", "compliance",
                "grayness", "seconds");
  out += line;
  struct Agg {
    int n = 0, passed = 0;
    double c = 0.0;
  };
  std::map<std::string, Agg> agg;
  for (const auto& c : cells) {
    const std::string kind(to_string(c.controller));
    if (!c.error.empty()) {
      std::snprintf(line, sizeof line, "%-28s %-12s %5s %s\n", c.problem.c_str(), kind.c_str(), "ERR",
                    c.error.c_str());
    } else {
      std::snprintf(line, sizeof line, "%-28s %-12s %5s %12.4f %9.4f %8.1f\n", c.problem.c_str(), kind.c_str(),
                    c.pass ? "yes" : "no", c.compliance, c.grayness, c.seconds);
    }
    out += line;
    auto& a = agg[kind];
    ++a.n;
    if (c.pass) ++a.passed;
    if (c.error.empty()) a.c += c.compliance;
  }
  out += "\n";
  for (const auto& [kind, a] : agg) {
    std::snprintf(line, sizeof line, "%-12s pass %d/%d  mean C %.4f\n", kind.c_str(), a.passed, a.n,
                  a.n ? a.c / a.n : 0.0);
    out += line;
  }
  return out;
}

} // namespace autosimp
