#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "autosimp/evaluator.hpp"
#include "test_support.hpp"

using namespace autosimp;

namespace {

// Union-find over face-adjacent solid elements; reached = union of components that hold a seed.
double reachability_oracle(const std::vector<double>& rho, const SolverArrays& arrays, const Mesh& m) {
  const int n = m.num_elements();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto solid = [&](int e) { return rho[e] > 0.5; };
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      if (!solid(a) || !solid(b)) continue;
      const auto ca = m.element_coords(a), cb = m.element_coords(b);
      const int d = std::abs(ca[0] - cb[0]) + std::abs(ca[1] - cb[1]) + std::abs(ca[2] - cb[2]);
      if (d == 1) parent[find(a)] = find(b);
    }
  std::set<int> fixed_nodes;
  for (int dof : arrays.fixed_dofs) fixed_nodes.insert(dof / m.dim());
  std::set<int> seed_roots;
  int n_solid = 0;
  for (int e = 0; e < n; ++e) {
    if (!solid(e)) continue;
    ++n_solid;
    const auto nodes = m.element_nodes(e);
    for (int k = 0; k < m.nodes_per_element(); ++k)
      if (fixed_nodes.count(nodes[k])) seed_roots.insert(find(e));
  }
  int reached = 0;
  for (int e = 0; e < n; ++e)
    if (solid(e) && seed_roots.count(find(e))) ++reached;
  return n_solid ? double(reached) / n_solid : 0.0;
}

ProblemSpec random_problem(std::mt19937_64& rng, bool solid) {
  std::uniform_int_distribution<> nxy(2, solid ? 8 : 12), nzd(1, 4);
  ProblemSpec s;
  const int nx = nxy(rng), ny = nxy(rng);
  s.domain_size = {double(nx), double(ny), std::nullopt};
  s.mesh = {nx, ny, std::nullopt};
  if (solid) {
    const int nz = nzd(rng);
    s.domain_size.lz = double(nz);
    s.mesh.nz = nz;
  }
  const int dim = solid ? 3 : 2;
  std::uniform_real_distribution<> u(0.0, 1.0);
  if (u(rng) < 0.5) s.supports.push_back({Edge::left, SupportKind::fixed});
  for (int k = 0; k < 2; ++k) {
    Coords p{u(rng) * nx, u(rng) * ny};
    if (dim == 3) p.push_back(u(rng) * *s.mesh.nz);
    s.supports.push_back({p, SupportKind::pin_y});
  }
  Coords at{double(nx), ny / 2.0}, f{0.0, -1.0};
  if (dim == 3) {
    at.push_back(0.0);
    f.push_back(0.0);
  }
  s.loads.push_back(PointLoad{at, f});
  return s;
}

SolveHistory history_of(const std::vector<double>& cs, int main_count = -1) {
  SolveHistory h;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    IterationRecord r;
    r.iteration = int(i);
    r.compliance = cs[i];
    r.phase = main_count < 0 || int(i) < main_count ? Phase::main : Phase::tail;
    h.records.push_back(r);
  }
  h.main_iterations = main_count < 0 ? int(cs.size()) : main_count;
  return h;
}

} // namespace

TEST_CASE("flood fill equals exhaustive reachability on random 2-D masks") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const ProblemSpec s = random_problem(rng, false);
    const Mesh m = Mesh::from_spec(s);
    const auto arrays = generate_bc(s);
    const double density = std::uniform_real_distribution<>(0.3, 0.9)(rng);
    std::vector<double> rho(m.num_elements());
    for (double& r : rho) r = std::uniform_real_distribution<>(0.0, 1.0)(rng) < density ? 1.0 : 0.0;
    const auto c = check_connectivity(rho, arrays, m);
    REQUIRE_MESSAGE(c.fraction == reachability_oracle(rho, arrays, m), "trial " << trial);
  }
}

TEST_CASE("flood fill equals exhaustive reachability on random 3-D masks") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const ProblemSpec s = random_problem(rng, true);
    const Mesh m = Mesh::from_spec(s);
    REQUIRE(m.nx <= 8);
    REQUIRE(m.nz <= 4);
    const auto arrays = generate_bc(s);
    std::vector<double> rho(m.num_elements());
    for (double& r : rho) r = std::uniform_real_distribution<>(0.0, 1.0)(rng);
    const auto c = check_connectivity(rho, arrays, m);
    REQUIRE_MESSAGE(c.fraction == reachability_oracle(rho, arrays, m), "trial " << trial);
  }
}

TEST_CASE("connectivity examples") {
  const ProblemSpec s = test::cantilever_spec(10, 5);
  const Mesh m = Mesh::from_spec(s);
  const auto arrays = generate_bc(s);
  const std::vector<double> full(m.num_elements(), 1.0);
  const auto c = check_connectivity(full, arrays, m);
  CHECK(c.fraction == 1.0);
  CHECK(c.pass);

  // supports in a left blob, load in a right blob
  std::vector<double> split(m.num_elements(), 0.0);
  for (int e = 0; e < m.num_elements(); ++e) {
    const int ix = m.element_coords(e)[0];
    if (ix < 3 || ix > 6) split[e] = 1.0;
  }
  const auto d = check_connectivity(split, arrays, m);
  CHECK(!d.loads_reached);
  CHECK(!d.pass);

  const std::vector<double> empty(m.num_elements(), 0.0);
  const auto e = check_connectivity(empty, arrays, m);
  CHECK(e.no_solid);
  CHECK(!e.pass);
}

TEST_CASE("compliance ratio gate") {
  CHECK(check_compliance_ratio(history_of({5, 4, 3, 2, 1})).value == 1.0);
  CHECK(check_compliance_ratio(history_of({5, 4, 3, 2, 1})).pass);
  CHECK(!check_compliance_ratio(history_of({4, 1, 2.5})).pass);
  CHECK(check_compliance_ratio(history_of({4, 1, 1.99})).pass);
  CHECK(!check_compliance_ratio(history_of({4, 1, 2.0})).pass);
  CHECK(!check_compliance_ratio(SolveHistory{}).evaluated);
}

TEST_CASE("grayness gate") {
  auto g = check_grayness(std::vector<double>(50, 0.5));
  CHECK(g.value == 1.0);
  CHECK(!g.pass);
  g = check_grayness(std::vector<double>{0, 1, 1, 0});
  CHECK(g.value == 0.0);
  CHECK(g.pass);
  CHECK(check_grayness(std::vector<double>(10, 0.25)).value == 0.75);
}

TEST_CASE("volume gate") {
  CHECK(check_volume(std::vector<double>(10, 0.5), 0.5).value == 0.0);
  auto v = check_volume(std::vector<double>(10, 0.53), 0.5);
  CHECK(v.value == doctest::Approx(0.03));
  CHECK(!v.pass);
  CHECK(check_volume(std::vector<double>(10, 0.52), 0.5).pass);
}

TEST_CASE("convergence gate") {
  CHECK(check_convergence(history_of(std::vector<double>(20, 3.0))).mode == ConvergenceMode::stability);
  std::vector<double> osc;
  for (int i = 0; i < 30; ++i) osc.push_back(i % 2 ? 1.1 : 0.9);
  CHECK(!check_convergence(history_of(osc)).pass);
  SolveHistory h = history_of(osc);
  h.early_exit = true;
  CHECK(check_convergence(h).mode == ConvergenceMode::early_exit);
  h.early_exit = false;
  h.functional_convergence = true;
  CHECK(check_convergence(h).mode == ConvergenceMode::functional);
  // fewer than 15 main-loop records cannot establish stability, tail records do not count
  CHECK(!check_convergence(history_of(std::vector<double>(14, 3.0))).pass);
  CHECK(!check_convergence(history_of(std::vector<double>(40, 3.0), 10)).pass);
}

TEST_CASE("quality metrics examples") {
  ProblemSpec s;
  s.domain_size = {5.0, 10.0, std::nullopt};
  s.mesh = {5, 10, std::nullopt};
  s.supports = {{Edge::bottom, SupportKind::fixed}};
  s.loads = {PointLoad{{2.0, 10.0}, {0.0, -1.0}}};
  const Mesh m = Mesh::from_spec(s);
  const auto arrays = generate_bc(s);

  std::vector<double> column(m.num_elements(), 0.0);
  for (int iy = 0; iy < 10; ++iy) column[m.element_index(2, iy)] = 1.0;
  const auto mc = compute_metrics(column, arrays, m);
  CHECK(mc.load_path_efficiency == doctest::Approx(1.0));
  CHECK(mc.thin_member_fraction == 1.0);

  std::vector<double> bar(m.num_elements(), 0.0);
  for (int ix = 0; ix < 5; ++ix) bar[m.element_index(ix, 4)] = 1.0;
  CHECK(compute_metrics(bar, arrays, m).thin_member_fraction == 1.0);

  std::vector<double> checker(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto c = m.element_coords(e);
    checker[e] = (c[0] + c[1]) % 2;
  }
  CHECK(compute_metrics(checker, arrays, m).checkerboard_index == 1.0);
  CHECK(compute_metrics(std::vector<double>(m.num_elements(), 1.0), arrays, m).checkerboard_index == 0.0);
}

TEST_CASE("rerun hints") {
  ProblemSpec spec = test::cantilever_spec();
  spec.solve.max_iterations = 300;
  EvaluationReport r;
  r.connectivity.pass = true;
  r.grayness.pass = r.volume_error.pass = r.compliance_ratio.pass = true;
  r.convergence.pass = true;
  finalize_report(r, spec);
  CHECK(r.pass);
  CHECK(!r.hint);

  r.convergence.pass = false;
  r.grayness.pass = false;
  finalize_report(r, spec);
  REQUIRE(r.hint);
  CHECK(r.hint->reason == "convergence");
  CHECK(r.hint->max_iterations == 390);
  CHECK(apply_hint(spec, *r.hint).solve.max_iterations == 390);

  r.convergence.pass = true;
  finalize_report(r, spec);
  CHECK(r.hint->reason == "grayness");
  CHECK(r.hint->max_iterations == 390);

  r.grayness.pass = true;
  r.volume_error.pass = false;
  r.volume_actual = 0.53;
  finalize_report(r, spec);
  CHECK(r.hint->reason == "volume");
  CHECK(*r.hint->volume_fraction == doctest::Approx(0.53));
  CHECK(!r.hint->max_iterations);

  r.volume_error.pass = true;
  r.connectivity.pass = false;
  finalize_report(r, spec);
  CHECK(r.hint->reason == "default");
}

TEST_CASE("evaluate without a history is partial and keeps pass on evaluated gates") {
  const ProblemSpec s = test::cantilever_spec(10, 5);
  const auto arrays = generate_bc(s);
  std::vector<double> rho(50, 0.0);
  const Mesh m = Mesh::from_spec(s);
  for (int e = 0; e < 50; ++e)
    if (m.element_coords(e)[1] == 2 || m.element_coords(e)[0] < 3) rho[e] = 1.0;
  // volume: rows and columns give 10 + 15 - 3 = 22 of 50 elements solid
  const auto r = evaluate(rho, validate_spec(test::cantilever_spec(10, 5, 0.44)).spec, arrays, nullptr);
  CHECK(r.partial);
  CHECK(!r.compliance_ratio.evaluated);
  CHECK(r.convergence.mode == ConvergenceMode::not_evaluated);
  CHECK(r.connectivity.pass);
  CHECK(r.pass);
  const auto j = report_to_json(r);
  CHECK(j["gates"]["compliance_ratio"]["pass"].is_null());
  CHECK(j["gates"]["convergence"]["status"] == "not evaluated");

  const auto gray = evaluate(std::vector<double>(50, 0.5), s, arrays, nullptr);
  CHECK(gray.grayness.value == 1.0);
  CHECK(!gray.pass);
}

TEST_CASE("evaluator is pure") {
  const ProblemSpec s = test::cantilever_spec(10, 5);
  const auto arrays = generate_bc(s);
  std::mt19937_64 rng(1);
  std::vector<double> rho(50);
  for (double& r : rho) r = std::uniform_real_distribution<>(0.0, 1.0)(rng);
  const auto h = history_of({3, 2, 1});
  CHECK(report_to_json(evaluate(rho, s, arrays, &h)) == report_to_json(evaluate(rho, s, arrays, &h)));
}
