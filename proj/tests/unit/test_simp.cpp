#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "autosimp/controllers.hpp"
#include "autosimp/density_ops.hpp"
#include "autosimp/errors.hpp"
#include "autosimp/simp_solver.hpp"
#include "test_support.hpp"

using namespace autosimp;

namespace {

// O(n^2) cone filter written from the definition.
std::vector<double> filter_oracle(const Mesh& m, double r, const std::vector<double>& x) {
  std::vector<double> out(x.size());
  for (int e = 0; e < m.num_elements(); ++e) {
    const auto a = m.element_coords(e);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < m.num_elements(); ++j) {
      const auto b = m.element_coords(j);
      const double d = std::sqrt(double((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                        (a[2] - b[2]) * (a[2] - b[2])));
      const double w = std::max(0.0, r - d);
      num += w * x[j];
      den += w;
    }
    out[e] = num / den;
  }
  return out;
}

std::vector<double> random_field(std::size_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = std::uniform_real_distribution<>(lo, hi)(rng);
  return v;
}

} // namespace

TEST_CASE("cone filter matches the brute-force definition") {
  for (double r : {1.0, 1.5, 2.4, 3.7}) {
    ProblemSpec s = test::cantilever_spec(9, 5);
    Mesh m = Mesh::from_spec(s);
    const auto x = random_field(m.num_elements(), 17);
    DensityFilter f(m, r);
    const auto got = f.apply(x);
    const auto want = filter_oracle(m, r, x);
    for (std::size_t e = 0; e < x.size(); ++e) REQUIRE(got[e] == doctest::Approx(want[e]).epsilon(1e-13));
  }
  ProblemSpec s3;
  s3.domain_size = {1.0, 1.0, 1.0};
  s3.mesh = {4, 4, 4};
  const Mesh m3 = Mesh::from_spec(s3);
  const auto x = random_field(m3.num_elements(), 4);
  const auto got = DensityFilter(m3, 2.0).apply(x);
  const auto want = filter_oracle(m3, 2.0, x);
  for (std::size_t e = 0; e < x.size(); ++e) REQUIRE(got[e] == doctest::Approx(want[e]).epsilon(1e-13));
}

TEST_CASE("filter backprop is the transpose of apply") {
  const Mesh m = Mesh::from_spec(test::cantilever_spec(7, 6));
  const DensityFilter f(m, 2.2);
  const auto x = random_field(m.num_elements(), 1), g = random_field(m.num_elements(), 2, -1.0, 1.0);
  const auto fx = f.apply(x), bg = f.backprop(g);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t e = 0; e < x.size(); ++e) {
    lhs += g[e] * fx[e];
    rhs += bg[e] * x[e];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("heaviside endpoints and derivative") {
  for (double beta : {1.0, 2.0, 8.0, 32.0}) {
    CHECK(heaviside(0.0, beta) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(heaviside(1.0, beta) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(heaviside(0.5, beta) == doctest::Approx(0.5).epsilon(1e-15));
    for (double x : {0.1, 0.37, 0.5, 0.81}) {
      const double h = 1e-6;
      const double fd = (heaviside(x + h, beta) - heaviside(x - h, beta)) / (2 * h);
      CHECK(heaviside_derivative(x, beta) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("grayness spot values") {
  const std::vector<double> half(100, 0.5), binary{0.0, 1.0, 1.0, 0.0, 1.0};
  CHECK(grayness(half) == 1.0);
  CHECK(grayness(binary) == 0.0);
  CHECK(grayness(std::vector<double>{0.25, 0.75}) == doctest::Approx(0.75));
}

TEST_CASE("three-field chain rule matches central differences at beta = 2") {
  const auto start = std::chrono::steady_clock::now();
  ProblemSpec s = test::cantilever_spec(8, 4);
  const auto arrays = generate_bc(s);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 1.5);
  const double beta = 2.0, p = 3.0;
  FeOptions fe;
  fe.solver = LinearSolverKind::direct;
  FeModel model(m, s.material, arrays, fe);
  const auto& mask = arrays.passive_mask;

  auto compliance_of = [&](const std::vector<double>& x) {
    return model.solve(project(x, filter, beta, mask, s.material.rho_min).physical, p).compliance;
  };
  auto volume_of = [&](const std::vector<double>& x) {
    return mean(project(x, filter, beta, mask, s.material.rho_min).physical);
  };

  const auto x = random_field(m.num_elements(), 23, 0.2, 0.8);
  const Projection proj = project(x, filter, beta, mask, s.material.rho_min);
  const FieldState st = model.solve(proj.physical, p);
  const DesignSensitivities sens = chain_rule(st.sensitivity, proj, filter, beta, mask);

  double worst_c = 0.0, worst_v = 0.0;
  const double h = 1e-6;
  for (int e = 0; e < m.num_elements(); ++e) {
    auto xp = x, xm = x;
    xp[e] += h;
    xm[e] -= h;
    const double fd_c = (compliance_of(xp) - compliance_of(xm)) / (2 * h);
    const double fd_v = (volume_of(xp) - volume_of(xm)) / (2 * h);
    if (std::abs(fd_c) > 1e-12) worst_c = std::max(worst_c, std::abs(sens.dc[e] - fd_c) / std::abs(fd_c));
    if (std::abs(fd_v) > 1e-12) worst_v = std::max(worst_v, std::abs(sens.dv[e] - fd_v) / std::abs(fd_v));
  }
  CHECK(worst_c < 1e-3);
  CHECK(worst_v < 1e-3);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 10.0);
}

TEST_CASE("passive elements keep frozen values and zero sensitivities") {
  ProblemSpec s = test::cantilever_spec(10, 5);
  s.passive_regions = {{Circle{{1.0, 0.5}, 0.25}, PassiveType::void_},
                       {Box{{0.0, 0.0}, {0.4, 0.4}}, PassiveType::solid}};
  const auto arrays = generate_bc(s);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 1.5);
  const auto x = random_field(m.num_elements(), 3);
  const Projection proj = project(x, filter, 4.0, arrays.passive_mask, 1e-3);
  const std::vector<double> ones(m.num_elements(), 1.0);
  const auto sens = chain_rule(ones, proj, filter, 4.0, arrays.passive_mask);
  int passive = 0;
  for (int e = 0; e < m.num_elements(); ++e) {
    if (arrays.passive_mask[e] == PassiveState::free) continue;
    ++passive;
    CHECK(proj.physical[e] == (arrays.passive_mask[e] == PassiveState::solid ? 1.0 : 1e-3));
    CHECK(sens.dc[e] == 0.0);
    CHECK(sens.dv[e] == 0.0);
  }
  CHECK(passive > 0);
}

TEST_CASE("OC update hits the volume target") {
  const ProblemSpec s = test::cantilever_spec(20, 10, 0.4);
  const auto arrays = generate_bc(s);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 2.0);
  for (double beta : {1.0, 4.0, 16.0}) {
    auto x = initial_design(arrays.passive_mask, 0.4, 1e-3);
    const Projection proj = project(x, filter, beta, arrays.passive_mask, 1e-3);
    const FieldState st = assemble_and_solve(m, s.material, proj.physical, arrays, 3.0);
    const auto sens = chain_rule(st.sensitivity, proj, filter, beta, arrays.passive_mask);
    OcSettings os;
    os.volume_fraction = 0.4;
    os.beta = beta;
    const OcResult r = oc_update(x, sens.dc, sens.dv, arrays.passive_mask, filter, os);
    CHECK(std::abs(r.volume - 0.4) < 1e-4);
    CHECK(r.volume == doctest::Approx(mean(r.projection.physical)));
    for (std::size_t e = 0; e < x.size(); ++e) CHECK(std::abs(r.design[e] - x[e]) <= 0.2 + 1e-12);
  }
}

TEST_CASE("unreachable volume target raises BISECTION_FAILED") {
  ProblemSpec s = test::cantilever_spec(10, 5, 0.3);
  s.passive_regions = {{Box{{0.0, 0.0}, {1.6, 1.0}}, PassiveType::solid}};
  const auto arrays = generate_bc(s);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 1.5);
  const auto x = initial_design(arrays.passive_mask, 0.3, 1e-3);
  const std::vector<double> dc(x.size(), -1.0), dv(x.size(), 1.0);
  OcSettings os;
  os.volume_fraction = 0.3;
  try {
    oc_update(x, dc, dv, arrays.passive_mask, filter, os);
    FAIL("expected BISECTION_FAILED");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::bisection_failed);
  }
}

TEST_CASE("small solve records a history and a tail") {
  const ProblemSpec spec = validate_spec(test::cantilever_spec(30, 15)).spec;
  ProblemSpec s = spec;
  s.solve.max_iterations = 60;
  const auto arrays = generate_bc(s);
  ScheduleController ctl;
  int frames = 0;
  SolveOptions opts;
  opts.frames_every = 10;
  opts.on_progress = [&](const ProgressFrame& f) {
    if (f.density) ++frames;
  };
  const SolveResult r = solve(s, arrays, ctl, opts);
  CHECK(r.history.main_iterations <= 60);
  CHECK(r.history.tail_start != TailStart::none);
  CHECK(frames > 0);
  int tail = 0;
  for (const auto& rec : r.history.records) tail += rec.phase == Phase::tail;
  CHECK(tail == kStandardTail.n_tail);
  CHECK(r.compliance == doctest::Approx(r.history.records.back().compliance));
  for (std::size_t i = 0; i < r.history.records.size(); ++i) CHECK(r.history.records[i].iteration == int(i));
  CHECK(std::abs(mean(r.density) - 0.5) < 2e-3);
}

TEST_CASE("fixed controller has no tail") {
  ProblemSpec s = validate_spec(test::cantilever_spec(20, 10)).spec;
  s.solve.max_iterations = 20;
  FixedController ctl;
  const SolveResult r = solve(s, generate_bc(s), ctl);
  CHECK(r.history.tail_start == TailStart::none);
  for (const auto& rec : r.history.records) CHECK(rec.phase == Phase::main);
}

TEST_CASE("filter degenerate cases") {
  const Mesh m = Mesh::from_spec(test::cantilever_spec(6, 4));
  const auto x = random_field(m.num_elements(), 9);
  CHECK(DensityFilter(m, 0.5).apply(x) == x);
  const std::vector<double> c(m.num_elements(), 0.37);
  for (double v : DensityFilter(m, 2.5).apply(c)) CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
}

TEST_CASE("heaviside at beta = 32 matches the direct formula") {
  const long double b = 32, eta = 0.5L, x = 0.6L;
  const long double direct = (std::tanh(b * eta) + std::tanh(b * (x - eta))) / (std::tanh(b * eta) + std::tanh(b * (1 - eta)));
  CHECK(std::abs(heaviside(0.6, 32.0) - static_cast<double>(direct)) < 1e-9);
}

TEST_CASE("OC stationary cases") {
  ProblemSpec s = test::cantilever_spec(8, 4);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 1.5);
  const std::size_t n = m.num_elements();
  const std::vector<double> dc(n, -1.0), dv(n, 1.0 / n);
  OcSettings os;
  os.volume_fraction = 0.5;

  const std::vector<PassiveState> free(n, PassiveState::free);
  const auto r = oc_update(std::vector<double>(n, 0.5), dc, dv, free, filter, os);
  for (double v : r.design) CHECK(v == doctest::Approx(0.5).epsilon(1e-3));

  const std::vector<PassiveState> solid(n, PassiveState::solid);
  os.volume_fraction = 1.0;
  const auto f = oc_update(std::vector<double>(n, 1.0), dc, dv, solid, filter, os);
  for (double v : f.design) CHECK(v == 1.0);
}

TEST_CASE("one OC step from uniform on 8x4 stays on the volume target") {
  const ProblemSpec s = test::cantilever_spec(8, 4);
  const auto arrays = generate_bc(s);
  const Mesh m = Mesh::from_spec(s);
  const DensityFilter filter(m, 1.5);
  const auto x = initial_design(arrays.passive_mask, 0.5, 1e-3);
  const Projection proj = project(x, filter, 1.0, arrays.passive_mask, 1e-3);
  const FieldState st = assemble_and_solve(m, s.material, proj.physical, arrays, 3.0);
  const auto sens = chain_rule(st.sensitivity, proj, filter, 1.0, arrays.passive_mask);
  const OcResult r = oc_update(x, sens.dc, sens.dv, arrays.passive_mask, filter, OcSettings{});
  CHECK(std::abs(mean(r.projection.physical) - 0.5) < 1e-3);
}

TEST_CASE("gradient check at uniform density with p = 1") {
  const ProblemSpec s = test::cantilever_spec(8, 4);
  const Mesh m = Mesh::from_spec(s);
  const std::vector<double> rho(m.num_elements(), 1.0);
  CHECK(compliance_gradient_check(m, s.material, generate_bc(s), rho, 1.0) < 1e-4);
}

TEST_CASE("zero budget without a valid snapshot tails from the uniform design") {
  ProblemSpec s = validate_spec(test::cantilever_spec(20, 10)).spec;
  s.solve.max_iterations = 0;
  ScheduleController ctl;
  const auto r = solve(s, generate_bc(s), ctl);
  CHECK(r.history.main_iterations == 0);
  CHECK(r.history.tail_start == TailStart::uniform);
}
