#include "autosimp/simp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "autosimp/errors.hpp"

namespace autosimp {

std::string_view to_string(Phase p) { return p == Phase::main ? "main" : "tail"; }

Projection project(std::span<const double> design, const DensityFilter& filter, double beta,
                   std::span<const PassiveState> mask, double rho_min) {
  Projection out;
  out.filtered = filter.apply(design);
  out.physical = heaviside(out.filtered, beta);
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (mask[e] == PassiveState::void_) out.physical[e] = rho_min;
    else if (mask[e] == PassiveState::solid) out.physical[e] = 1.0;
  }
  return out;
}

std::vector<double> initial_design(std::span<const PassiveState> mask, double volume_fraction, double rho_min) {
  std::vector<double> rho(mask.size(), volume_fraction);
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (mask[e] == PassiveState::void_) rho[e] = rho_min;
    else if (mask[e] == PassiveState::solid) rho[e] = 1.0;
  }
  return rho;
}

DesignSensitivities chain_rule(std::span<const double> dc_physical, const Projection& projection,
                               const DensityFilter& filter, double beta, std::span<const PassiveState> mask) {
  const std::size_t n = projection.filtered.size();
  std::vector<double> gc(n), gv(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t e = 0; e < n; ++e) {
    if (mask[e] != PassiveState::free) {
      gc[e] = gv[e] = 0.0;
      continue;
    }
    const double dh = heaviside_derivative(projection.filtered[e], beta);
    gc[e] = dc_physical[e] * dh;
    gv[e] = inv_n * dh;
  }
  DesignSensitivities s{filter.backprop(gc), filter.backprop(gv)};
  for (std::size_t e = 0; e < n; ++e)
    if (mask[e] != PassiveState::free) s.dc[e] = s.dv[e] = 0.0;
  return s;
}

namespace {

void reset_passive(std::vector<double>& rho, std::span<const PassiveState> mask, double rho_min) {
  for (std::size_t e = 0; e < mask.size(); ++e) {
    if (mask[e] == PassiveState::void_) rho[e] = rho_min;
    else if (mask[e] == PassiveState::solid) rho[e] = 1.0;
  }
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

} // namespace

OcResult oc_update(std::span<const double> design, std::span<const double> dc, std::span<const double> dv,
                   std::span<const PassiveState> mask, const DensityFilter& filter, const OcSettings& s) {
  const std::size_t n = design.size();
  const double target = s.volume_fraction;

  // Reachability without move limits.
  {
    std::vector<double> lo(n, s.rho_min), hi(n, 1.0);
    reset_passive(lo, mask, s.rho_min);
    reset_passive(hi, mask, s.rho_min);
    const double vmin = mean(project(lo, filter, s.beta, mask, s.rho_min).physical);
    const double vmax = mean(project(hi, filter, s.beta, mask, s.rho_min).physical);
    if (target < vmin - s.volume_tolerance || target > vmax + s.volume_tolerance)
      throw Error(ErrorCode::bisection_failed,
                  "volume fraction " + std::to_string(target) + " outside reachable range [" +
                      std::to_string(vmin) + ", " + std::to_string(vmax) + "]");
  }

  // Scale-free multiplier range.
  const double sc = max_abs(dc) > 0.0 ? max_abs(dc) : 1.0;
  const double sv = max_abs(dv) > 0.0 ? max_abs(dv) : 1.0;

  auto candidate = [&](double lambda) {
    std::vector<double> next(design.begin(), design.end());
    for (std::size_t e = 0; e < n; ++e) {
      if (mask[e] != PassiveState::free) continue;
      const double g = std::max(0.0, -dc[e] / sc);
      const double v = std::max(1e-30, dv[e] / sv);
      const double lo = std::max(s.rho_min, design[e] - s.delta);
      const double hi = std::min(1.0, design[e] + s.delta);
      next[e] = std::clamp(design[e] * std::sqrt(g / (lambda * v)), lo, hi);
    }
    reset_passive(next, mask, s.rho_min);
    return next;
  };

  OcResult result;
  double l1 = 1e-9, l2 = 1e9;
  for (int step = 1; step <= s.max_bisection_steps; ++step) {
    const double lambda = std::sqrt(l1 * l2);
    auto next = candidate(lambda);
    auto proj = project(next, filter, s.beta, mask, s.rho_min);
    const double vol = mean(proj.physical);
    result.design = std::move(next);
    result.projection = std::move(proj);
    result.volume = vol;
    result.lambda = lambda;
    result.bisection_steps = step;
    if (std::abs(vol - target) < s.volume_tolerance) break;
    if (vol > target) l1 = lambda;
    else l2 = lambda;
  }
  return result;
}

namespace {

class FilterCache {
public:
  explicit FilterCache(const Mesh& mesh) : mesh_(mesh) {}
  const DensityFilter& get(double r_min) {
    auto it = cache_.find(r_min);
    if (it == cache_.end()) it = cache_.emplace(r_min, DensityFilter(mesh_, r_min)).first;
    return it->second;
  }

private:
  const Mesh& mesh_;
  std::map<double, DensityFilter> cache_;
};

struct IterationOutcome {
  IterationRecord record;
  std::vector<double> next_design;
  std::vector<double> physical;
};

class Runner {
public:
  Runner(const ProblemSpec& spec, const SolverArrays& arrays, const SolveOptions& options)
      : spec_(spec), arrays_(arrays), options_(options), mesh_(Mesh::from_spec(spec)),
        fe_(mesh_, spec.material, arrays, options.fe), filters_(mesh_) {}

  std::vector<double> uniform() const {
    return initial_design(arrays_.passive_mask, spec_.volume_fraction, spec_.material.rho_min);
  }

  std::vector<double> from_snapshot(const DensitySnapshot& snap) const {
    std::vector<double> rho = snap.density;
    for (double& r : rho) r = std::clamp(r, spec_.material.rho_min, 1.0);
    reset_passive(rho, arrays_.passive_mask, spec_.material.rho_min);
    return rho;
  }

  IterationRecord iterate(int index, Phase phase, const ControlParams& params, std::vector<double>& design,
                          SolveHistory& history) {
    const auto& mask = arrays_.passive_mask;
    const DensityFilter& filter = filters_.get(params.r_min);
    const Projection proj = project(design, filter, params.beta, mask, spec_.material.rho_min);

    FieldState field;
    try {
      field = fe_.solve(proj.physical, params.p);
    } catch (const Error& err) {
      throw Error(err.code(), std::string(err.what()) + " (iteration " + std::to_string(index) + ")");
    }

    IterationRecord rec;
    rec.iteration = index;
    rec.phase = phase;
    rec.compliance = field.compliance;
    rec.volume = mean(proj.physical);
    rec.grayness = grayness(proj.physical);
    rec.params = params;
    rec.linear_iterations = field.solver_iterations;

    const bool valid = params.p >= kValidityGateP && rec.volume <= spec_.volume_fraction + kValidVolumeSlack;
    if (valid && (!history.best_valid || rec.compliance < history.best_valid->compliance))
      history.best_valid = DensitySnapshot{proj.physical, rec.compliance, index};
    if (!history.best_overall || rec.compliance < history.best_overall->compliance)
      history.best_overall = DensitySnapshot{proj.physical, rec.compliance, index};

    const auto sens = chain_rule(field.sensitivity, proj, filter, params.beta, mask);
    OcSettings oc;
    oc.volume_fraction = spec_.volume_fraction;
    oc.delta = params.delta;
    oc.rho_min = spec_.material.rho_min;
    oc.beta = params.beta;
    OcResult upd;
    try {
      upd = oc_update(design, sens.dc, sens.dv, mask, filter, oc);
    } catch (const Error& err) {
      throw Error(err.code(), std::string(err.what()) + " (iteration " + std::to_string(index) + ")");
    }

    double change = 0.0;
    for (std::size_t e = 0; e < design.size(); ++e)
      change = std::max(change, std::abs(upd.projection.physical[e] - proj.physical[e]));
    rec.change = change;
    design = std::move(upd.design);
    last_physical_ = proj.physical;

    history.records.push_back(rec);
    emit(rec);
    return rec;
  }

  const std::vector<double>& last_physical() const { return last_physical_; }

  double evaluate_only(const std::vector<double>& design, const ControlParams& params) {
    const Projection proj =
        project(design, filters_.get(params.r_min), params.beta, arrays_.passive_mask, spec_.material.rho_min);
    last_physical_ = proj.physical;
    return fe_.solve(proj.physical, params.p).compliance;
  }

  // Volume above the target still counted as feasible for the best-valid snapshot.
  static constexpr double kValidVolumeSlack = 1e-3;

private:
  void emit(const IterationRecord& rec) {
    if (!options_.on_progress) return;
    ProgressFrame frame;
    frame.iteration = rec.iteration;
    frame.phase = rec.phase;
    frame.compliance = rec.compliance;
    frame.volume = rec.volume;
    frame.grayness = rec.grayness;
    frame.change = rec.change;
    frame.params = rec.params;
    if (options_.frames_every > 0 && rec.iteration % options_.frames_every == 0)
      frame.density = std::make_shared<const std::vector<double>>(last_physical_);
    options_.on_progress(frame);
  }

  const ProblemSpec& spec_;
  const SolverArrays& arrays_;
  const SolveOptions& options_;
  Mesh mesh_;
  FeModel fe_;
  FilterCache filters_;
  std::vector<double> last_physical_;
};

} // namespace

SolveResult solve(const ProblemSpec& spec, const SolverArrays& arrays, Controller& controller,
                  const SolveOptions& options) {
  Runner runner(spec, arrays, options);
  SolveResult result;
  SolveHistory& history = result.history;

  const int budget = spec.solve.max_iterations;
  ControlParams params = controller.initialize(budget);
  params.restart = false;
  std::vector<double> design = runner.uniform();

  int index = 0;
  for (int k = 0; k < budget; ++k) {
    const IterationRecord rec = runner.iterate(index++, Phase::main, params, design, history);
    history.main_iterations = k + 1;

    SolverObservation obs;
    obs.iteration = k;
    obs.budget = budget;
    obs.compliance = rec.compliance;
    obs.volume = rec.volume;
    obs.grayness = rec.grayness;
    obs.change = rec.change;
    obs.params = params;
    obs.has_best_valid = history.best_valid.has_value();
    if (history.best_valid) obs.best_valid_compliance = history.best_valid->compliance;

    const ControllerAction action = controller.step(obs);
    if (action.params) {
      params = *action.params;
      if (params.restart && history.best_valid) design = runner.from_snapshot(*history.best_valid);
      params.restart = false;
    }
    if (action.functional_convergence) {
      history.functional_convergence = true;
      break;
    }
    if (action.allow_early_exit && rec.change < 0.01) {
      history.early_exit = true;
      break;
    }
  }

  if (const auto tail = controller.finalize()) {
    if (history.best_valid) {
      design = runner.from_snapshot(*history.best_valid);
      history.tail_start = TailStart::best_valid;
    } else {
      design = runner.uniform();
      history.tail_start = TailStart::uniform;
    }
    const ControlParams tail_params = tail->params();
    for (int t = 0; t < tail->n_tail; ++t) runner.iterate(index++, Phase::tail, tail_params, design, history);
  }

  if (history.records.empty()) {
    result.compliance = runner.evaluate_only(design, params);
  } else {
    result.compliance = history.records.back().compliance;
  }
  result.density = runner.last_physical();
  return result;
}

} // namespace autosimp
