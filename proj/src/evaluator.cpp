#include "autosimp/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "autosimp/density_ops.hpp"

namespace autosimp {

std::string_view to_string(ConvergenceMode m) {
  switch (m) {
  case ConvergenceMode::early_exit: return "early_exit";
  case ConvergenceMode::stability: return "stability";
  case ConvergenceMode::functional: return "functional";
  case ConvergenceMode::failed: return "failed";
  case ConvergenceMode::not_evaluated: return "not_evaluated";
  }
  return "unknown";
}

namespace {

template <class F>
void for_each_face_neighbor(const Mesh& mesh, int e, F&& f) {
  const auto [ix, iy, iz] = mesh.element_coords(e);
  if (ix > 0) f(mesh.element_index(ix - 1, iy, iz));
  if (ix + 1 < mesh.nx) f(mesh.element_index(ix + 1, iy, iz));
  if (iy > 0) f(mesh.element_index(ix, iy - 1, iz));
  if (iy + 1 < mesh.ny) f(mesh.element_index(ix, iy + 1, iz));
  if (mesh.solid) {
    if (iz > 0) f(mesh.element_index(ix, iy, iz - 1));
    if (iz + 1 < mesh.nz) f(mesh.element_index(ix, iy, iz + 1));
  }
}

std::vector<int> elements_at_node(const Mesh& mesh, int node) {
  const auto [nx, ny, nz] = mesh.node_coords(node);
  std::vector<int> out;
  const int z_lo = mesh.solid ? std::max(0, nz - 1) : 0;
  const int z_hi = mesh.solid ? std::min(mesh.nz - 1, nz) : 0;
  for (int kz = z_lo; kz <= z_hi; ++kz)
    for (int ky = std::max(0, ny - 1); ky <= std::min(mesh.ny - 1, ny); ++ky)
      for (int kx = std::max(0, nx - 1); kx <= std::min(mesh.nx - 1, nx); ++kx)
        out.push_back(mesh.element_index(kx, ky, kz));
  return out;
}

std::vector<char> solid_set(std::span<const double> rho) {
  std::vector<char> s(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e) s[e] = rho[e] > kSolidThreshold;
  return s;
}

/// Solid elements that contain at least one node with a fixed DOF.
std::vector<int> support_elements(const std::vector<char>& solid, const SolverArrays& arrays, const Mesh& mesh) {
  std::vector<char> mark(solid.size(), 0);
  const int dim = mesh.dim();
  int last_node = -1;
  for (int dof : arrays.fixed_dofs) {
    const int node = dof / dim;
    if (node == last_node) continue;
    last_node = node;
    for (int e : elements_at_node(mesh, node))
      if (solid[e]) mark[e] = 1;
  }
  std::vector<int> out;
  for (std::size_t e = 0; e < mark.size(); ++e)
    if (mark[e]) out.push_back(static_cast<int>(e));
  return out;
}

/// BFS step counts through solid elements from `sources`; -1 where unreachable.
std::vector<int> bfs(const std::vector<char>& solid, const std::vector<int>& sources, const Mesh& mesh) {
  std::vector<int> dist(solid.size(), -1);
  std::queue<int> q;
  for (int s : sources)
    if (solid[s] && dist[s] < 0) {
      dist[s] = 0;
      q.push(s);
    }
  while (!q.empty()) {
    const int e = q.front();
    q.pop();
    for_each_face_neighbor(mesh, e, [&](int n) {
      if (solid[n] && dist[n] < 0) {
        dist[n] = dist[e] + 1;
        q.push(n);
      }
    });
  }
  return dist;
}

double centroid_distance(const Mesh& mesh, int a, int b) {
  const auto ca = mesh.element_coords(a), cb = mesh.element_coords(b);
  const double dx = ca[0] - cb[0], dy = ca[1] - cb[1], dz = ca[2] - cb[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

} // namespace

ConnectivityResult check_connectivity(std::span<const double> rho, const SolverArrays& arrays, const Mesh& mesh) {
  ConnectivityResult r;
  const auto solid = solid_set(rho);
  const auto n_solid = std::count(solid.begin(), solid.end(), 1);
  if (n_solid == 0) {
    r.no_solid = true;
    return r;
  }
  const auto dist = bfs(solid, support_elements(solid, arrays, mesh), mesh);
  const auto reached = std::count_if(dist.begin(), dist.end(), [](int d) { return d >= 0; });
  r.fraction = static_cast<double>(reached) / static_cast<double>(n_solid);

  r.loads_reached = true;
  for (int node : loaded_nodes(arrays, mesh)) {
    bool any_solid = false;
    for (int e : elements_at_node(mesh, node)) {
      if (!solid[e]) continue;
      any_solid = true;
      if (dist[e] < 0) r.loads_reached = false;
    }
    if (!any_solid) r.loads_reached = false;
  }
  r.pass = r.fraction >= kConnectivityMin && r.loads_reached;
  return r;
}

ScalarGate check_compliance_ratio(const SolveHistory& history) {
  ScalarGate g;
  if (history.records.empty()) {
    g.evaluated = false;
    return g;
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : history.records) best = std::min(best, rec.compliance);
  const double final_c = history.records.back().compliance;
  g.value = best > 0.0 ? final_c / best : (final_c > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  g.pass = g.value < kComplianceRatioMax;
  return g;
}

ScalarGate check_grayness(std::span<const double> rho) {
  ScalarGate g;
  g.value = grayness(rho);
  g.pass = g.value <= kGraynessMax;
  return g;
}

ScalarGate check_volume(std::span<const double> rho, double volume_fraction) {
  ScalarGate g;
  g.value = std::abs(mean(rho) - volume_fraction);
  // Tolerance absorbs rounding in the mean so that boundary cases such as 0.52 vs 0.5 pass.
  g.pass = g.value <= kVolumeErrorMax + 1e-12;
  return g;
}

ConvergenceResult check_convergence(const SolveHistory& history) {
  ConvergenceResult c;
  if (history.early_exit) {
    c.mode = ConvergenceMode::early_exit;
    c.pass = true;
    return c;
  }
  std::vector<double> main_c;
  for (const auto& rec : history.records)
    if (rec.phase == Phase::main) main_c.push_back(rec.compliance);
  if (static_cast<int>(main_c.size()) >= kStabilityWindow) {
    const auto first = main_c.end() - kStabilityWindow;
    const auto [lo, hi] = std::minmax_element(first, main_c.end());
    if (*lo > 0.0 && (*hi - *lo) / *lo < kStabilityRange) {
      c.mode = ConvergenceMode::stability;
      c.pass = true;
      return c;
    }
  }
  if (history.functional_convergence) {
    c.mode = ConvergenceMode::functional;
    c.pass = true;
    return c;
  }
  c.mode = ConvergenceMode::failed;
  return c;
}

QualityMetrics compute_metrics(std::span<const double> rho, const SolverArrays& arrays, const Mesh& mesh) {
  QualityMetrics m;
  const auto solid = solid_set(rho);
  auto is_solid = [&](int ix, int iy, int iz) {
    return ix >= 0 && iy >= 0 && ix < mesh.nx && iy < mesh.ny && solid[mesh.element_index(ix, iy, iz)];
  };

  double thin_sum = 0.0, checker_sum = 0.0;
  int thin_slices = 0;
  for (int iz = 0; iz < mesh.nz; ++iz) {
    int n_solid = 0, n_thin = 0;
    for (int iy = 0; iy < mesh.ny; ++iy)
      for (int ix = 0; ix < mesh.nx; ++ix) {
        if (!is_solid(ix, iy, iz)) continue;
        ++n_solid;
        const bool thin_x = !is_solid(ix - 1, iy, iz) && !is_solid(ix + 1, iy, iz);
        const bool thin_y = !is_solid(ix, iy - 1, iz) && !is_solid(ix, iy + 1, iz);
        if (thin_x || thin_y) ++n_thin;
      }
    if (n_solid > 0) {
      thin_sum += static_cast<double>(n_thin) / n_solid;
      ++thin_slices;
    }

    double acc = 0.0;
    int blocks = 0;
    for (int iy = 0; iy + 1 < mesh.ny; ++iy)
      for (int ix = 0; ix + 1 < mesh.nx; ++ix) {
        const double a = rho[mesh.element_index(ix, iy, iz)];
        const double b = rho[mesh.element_index(ix + 1, iy, iz)];
        const double c = rho[mesh.element_index(ix + 1, iy + 1, iz)];
        const double d = rho[mesh.element_index(ix, iy + 1, iz)];
        acc += std::max(0.0, std::min(a, c) - std::max(b, d)) + std::max(0.0, std::min(b, d) - std::max(a, c));
        ++blocks;
      }
    if (blocks > 0) checker_sum += acc / blocks;
  }
  m.thin_member_fraction = thin_slices > 0 ? thin_sum / thin_slices : 0.0;
  m.checkerboard_index = checker_sum / mesh.nz;

  const auto supports = support_elements(solid, arrays, mesh);
  std::vector<char> is_support(solid.size(), 0);
  for (int e : supports) is_support[e] = 1;
  const auto loads = loaded_nodes(arrays, mesh);
  double eff_sum = 0.0;
  for (int node : loads) {
    std::vector<int> sources;
    for (int e : elements_at_node(mesh, node))
      if (solid[e]) sources.push_back(e);
    if (sources.empty() || supports.empty()) continue;
    const auto dist = bfs(solid, sources, mesh);
    int path = -1;
    for (int s : supports)
      if (dist[s] >= 0 && (path < 0 || dist[s] < path)) path = dist[s];
    if (path < 0) continue;
    if (path == 0) {
      eff_sum += 1.0;
      continue;
    }
    double euclid = std::numeric_limits<double>::infinity();
    for (int s : sources)
      for (int t : supports) euclid = std::min(euclid, centroid_distance(mesh, s, t));
    eff_sum += std::clamp(euclid / path, 0.0, 1.0);
  }
  m.load_path_efficiency = loads.empty() ? 0.0 : eff_sum / static_cast<double>(loads.size());
  return m;
}

std::optional<RerunHint> make_rerun_hint(const EvaluationReport& report, const ProblemSpec& spec) {
  if (report.pass) return std::nullopt;
  const int grown = static_cast<int>(std::ceil(kRetryGrowth * spec.solve.max_iterations - 1e-9));
  const bool conv_fail = report.convergence.evaluated && !report.convergence.pass;
  if (conv_fail) return RerunHint{"convergence", grown, std::nullopt};
  if (!report.grayness.pass) return RerunHint{"grayness", grown, std::nullopt};
  if (!report.volume_error.pass) {
    const double violation = report.volume_actual - spec.volume_fraction;
    return RerunHint{"volume", std::nullopt, spec.volume_fraction + violation};
  }
  return RerunHint{"default", grown, std::nullopt};
}

ProblemSpec apply_hint(const ProblemSpec& spec, const RerunHint& hint) {
  ProblemSpec out = spec;
  if (hint.max_iterations) out.solve.max_iterations = *hint.max_iterations;
  if (hint.volume_fraction) out.volume_fraction = *hint.volume_fraction;
  return out;
}

EvaluationReport evaluate(std::span<const double> rho, const ProblemSpec& spec, const SolverArrays& arrays,
                          const SolveHistory* history) {
  const Mesh mesh = Mesh::from_spec(spec);
  EvaluationReport r;
  r.connectivity = check_connectivity(rho, arrays, mesh);
  r.grayness = check_grayness(rho);
  r.volume_actual = mean(rho);
  r.volume_error = check_volume(rho, spec.volume_fraction);
  if (history) {
    r.compliance_ratio = check_compliance_ratio(*history);
    r.convergence = check_convergence(*history);
  } else {
    r.compliance_ratio.evaluated = false;
    r.convergence = {ConvergenceMode::not_evaluated, false, false};
  }
  r.metrics = compute_metrics(rho, arrays, mesh);
  finalize_report(r, spec);
  return r;
}

void finalize_report(EvaluationReport& r, const ProblemSpec& spec) {
  r.partial = !r.compliance_ratio.evaluated || !r.convergence.evaluated;
  r.pass = r.connectivity.pass && r.grayness.pass && r.volume_error.pass &&
           (!r.compliance_ratio.evaluated || r.compliance_ratio.pass) &&
           (!r.convergence.evaluated || r.convergence.pass);
  r.hint = make_rerun_hint(r, spec);
}

namespace {

nlohmann::ordered_json gate_json(const ScalarGate& g) {
  nlohmann::ordered_json j;
  if (!g.evaluated) {
    j["value"] = nullptr;
    j["pass"] = nullptr;
    j["status"] = "not evaluated";
    return j;
  }
  j["value"] = g.value;
  j["pass"] = g.pass;
  return j;
}

} // namespace

nlohmann::ordered_json hint_to_json(const RerunHint& hint) {
  nlohmann::ordered_json j;
  j["reason"] = hint.reason;
  if (hint.max_iterations) j["max_iterations"] = *hint.max_iterations;
  if (hint.volume_fraction) j["volume_fraction"] = *hint.volume_fraction;
  return j;
}

nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["pass"] = r.pass;
  j["partial"] = r.partial;
  auto& gates = j["gates"];
  gates["connectivity"] = {{"fraction", r.connectivity.fraction},
                           {"loads_reached", r.connectivity.loads_reached},
                           {"no_solid", r.connectivity.no_solid},
                           {"pass", r.connectivity.pass}};
  gates["compliance_ratio"] = gate_json(r.compliance_ratio);
  gates["grayness"] = gate_json(r.grayness);
  gates["volume_error"] = gate_json(r.volume_error);
  gates["volume_error"]["actual"] = r.volume_actual;
  nlohmann::ordered_json conv;
  conv["mode"] = to_string(r.convergence.mode);
  if (r.convergence.evaluated) conv["pass"] = r.convergence.pass;
  else {
    conv["pass"] = nullptr;
    conv["status"] = "not evaluated";
  }
  gates["convergence"] = conv;
  j["metrics"] = {{"thin_member_fraction", r.metrics.thin_member_fraction},
                  {"checkerboard_index", r.metrics.checkerboard_index},
                  {"load_path_efficiency", r.metrics.load_path_efficiency}};
  j["rerun_hint"] = r.hint ? hint_to_json(*r.hint) : nlohmann::ordered_json(nullptr);
  return j;
}

} // namespace autosimp
