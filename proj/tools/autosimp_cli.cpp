#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "autosimp/benchmark.hpp"
#include "autosimp/errors.hpp"
#include "autosimp/frame_codec.hpp"
#include "autosimp/orchestrator.hpp"
#include "autosimp/service.hpp"
#include "autosimp/spec_json.hpp"

using namespace autosimp;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + path);
  out << text;
}

ControllerKind controller_from(const std::string& name) {
  const auto k = parse_controller_kind(name);
  if (!k) throw Error(ErrorCode::invalid_argument, "unknown controller: " + name);
  return *k;
}

std::shared_ptr<LlmBackend> make_backend(const std::string& mock_path) {
  if (!mock_path.empty()) return MockBackend::from_file(mock_path);
  return std::make_shared<OpenAiCompatibleBackend>();
}

void print_summary(const RunReport& report) {
  std::cerr << "controller " << to_string(report.controller) << ", attempts " << report.attempts.size()
            << ", compliance " << report.compliance << ", " << (report.pass ? "PASS" : "FAIL") << "\n";
  if (const auto* ev = report.final_report()) {
    std::cerr << "  connectivity " << ev->connectivity.fraction << (ev->connectivity.pass ? " ok" : " FAIL")
              << "  grayness " << ev->grayness.value << (ev->grayness.pass ? " ok" : " FAIL") << "  volume error "
              << ev->volume_error.value << (ev->volume_error.pass ? " ok" : " FAIL") << "  convergence "
              << to_string(ev->convergence.mode) << "\n";
  }
}

/// Frames go to a JSON-lines side file next to the result.
std::function<void(const ProgressFrame&)> frame_writer(std::ofstream& sink, const ProblemSpec& spec) {
  const Mesh mesh = Mesh::from_spec(spec);
  return [&sink, mesh](const ProgressFrame& f) {
    if (!f.density) return;
    sink << frame_to_json(f.iteration, *f.density, mesh).dump() << "\n";
  };
}

ApiServer* g_server = nullptr;

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autonomous SIMP topology optimization"};
  app.require_subcommand(1);
  std::string mock_path;
  app.add_option("--mock-fixtures", mock_path, "Offline mock LLM backend fixture file");

  auto* configure_cmd = app.add_subcommand("configure", "Prompt to validated problem spec");
  std::string prompt, out_path;
  configure_cmd->add_option("--prompt", prompt, "Problem description")->required();
  configure_cmd->add_option("--out", out_path, "Spec output file (default stdout)");

  auto* solve_cmd = app.add_subcommand("solve", "Solve a spec file with retries");
  std::string spec_path, controller_name = "schedule";
  std::optional<int> iters;
  int retries = 2, frames_every = 0;
  solve_cmd->add_option("--spec", spec_path, "Problem spec JSON")->required();
  solve_cmd->add_option("--controller", controller_name, "llm|schedule|expert|three_field|tail_only|fixed");
  solve_cmd->add_option("--iters", iters, "Main-loop iteration budget override");
  solve_cmd->add_option("--retries", retries, "Maximum retries")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--out", out_path, "Result document (default stdout)");
  solve_cmd->add_option("--frames-every", frames_every, "Write a density frame every k iterations")
      ->check(CLI::NonNegativeNumber);

  auto* run_cmd = app.add_subcommand("run", "Configure and solve from a prompt");
  run_cmd->add_option("--prompt", prompt, "Problem description")->required();
  run_cmd->add_option("--controller", controller_name, "Controller kind");
  run_cmd->add_option("--retries", retries, "Maximum retries")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--out", out_path, "Result document (default stdout)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Re-run the evaluator on a result document");
  std::string result_path;
  eval_cmd->add_option("--result", result_path, "Result document")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Benchmark suite over controllers");
  std::string suite_path, controllers_csv = "schedule";
  int jobs = 1, bench_retries = 0;
  bench_cmd->add_option("--suite", suite_path, "Suite JSON")->required();
  bench_cmd->add_option("--controllers", controllers_csv, "Comma-separated controller kinds");
  bench_cmd->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--iters", iters, "Iteration budget override");
  bench_cmd->add_option("--retries", bench_retries, "Retries per cell")->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--out", out_path, "Machine-readable results (JSON)");

  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  int port = 8080, workers = 0;
  std::string host = "127.0.0.1";
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--workers", workers, "Solve workers (default: hardware concurrency)");

  CLI11_PARSE(app, argc, argv);

  try {
    const LlmBackendConfig backend_config = LlmBackendConfig::from_env();

    if (*configure_cmd) {
      auto backend = make_backend(mock_path);
      const ConfigureResult r = configure(prompt, backend.get(), backend_config);
      for (const auto& e : r.log) std::cerr << e.rail << " " << to_string(e.action) << ": " << e.detail << "\n";
      write_output(out_path, serialize_spec(r.spec));
      return 0;
    }

    if (*solve_cmd) {
      const ValidatedSpec v = prepare_spec(nlohmann::json::parse(read_file(spec_path)), iters);
      for (const auto& e : v.log) std::cerr << e.rail << " " << to_string(e.action) << ": " << e.detail << "\n";
      RunOptions ro;
      ro.controller = controller_from(controller_name);
      ro.retries = retries;
      ro.controller_options.backend = make_backend(mock_path);
      ro.controller_options.backend_config = backend_config;
      std::ofstream frames;
      if (frames_every > 0) {
        const std::string frames_path = (out_path.empty() || out_path == "-" ? std::string("autosimp") : out_path) +
                                        ".frames.jsonl";
        frames.open(frames_path);
        ro.solve.frames_every = frames_every;
        ro.solve.on_progress = frame_writer(frames, v.spec);
      }
      const RunReport report = run_from_spec(v.spec, ro, v.log);
      write_output(out_path, result_document(report));
      print_summary(report);
      return report.pass ? 0 : 1;
    }

    if (*run_cmd) {
      auto backend = make_backend(mock_path);
      RunOptions ro;
      ro.controller = controller_from(controller_name);
      ro.retries = retries;
      ro.controller_options.backend = backend;
      ro.controller_options.backend_config = backend_config;
      const RunReport report = run_pipeline(prompt, backend.get(), backend_config, ro);
      write_output(out_path, result_document(report));
      print_summary(report);
      return report.pass ? 0 : 1;
    }

    if (*eval_cmd) {
      const EvaluationReport r = evaluate_result_document(nlohmann::json::parse(read_file(result_path)));
      std::cout << report_to_json(r).dump(2) << "\n";
      return r.pass ? 0 : 1;
    }

    if (*bench_cmd) {
      std::vector<ControllerKind> kinds;
      std::stringstream ss(controllers_csv);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) kinds.push_back(controller_from(item));
      BenchOptions bo;
      bo.jobs = jobs;
      bo.retries = bench_retries;
      bo.max_iterations = iters;
      bo.controller_options.backend = make_backend(mock_path);
      bo.controller_options.backend_config = backend_config;
      const auto cells = run_benchmark(load_suite(suite_path), kinds, bo);
      if (!out_path.empty()) write_output(out_path, bench_to_json(cells).dump(2) + "\n");
      std::cout << bench_summary(cells);
      const bool all = std::all_of(cells.begin(), cells.end(), [](const BenchCell& c) { return c.pass; });
      return all ? 0 : 1;
    }

    if (*serve_cmd) {
      ServiceOptions so;
      so.workers = workers;
      so.backend = mock_path.empty() ? nullptr : make_backend(mock_path);
      so.backend_config = backend_config;
      ApiServer server(so);
      const int bound = server.bind(host, port);
      if (bound < 0) throw Error(ErrorCode::invalid_argument, "cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      server.listen();
      g_server = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
