#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "autosimp/bc_generator.hpp"
#include "autosimp/control.hpp"
#include "autosimp/density_ops.hpp"
#include "autosimp/fem.hpp"
#include "autosimp/problem_spec.hpp"

namespace autosimp {

enum class Phase { main, tail };
std::string_view to_string(Phase p);

struct IterationRecord {
  int iteration = 0; // global index across main loop and tail
  Phase phase = Phase::main;
  double compliance = 0.0;
  double volume = 0.0;   // mean physical density over all elements
  double grayness = 0.0;
  double change = 0.0;   // max |rho_phys(k+1) - rho_phys(k)|
  ControlParams params;
  int linear_iterations = 0;
};

struct DensitySnapshot {
  std::vector<double> density; // physical densities
  double compliance = 0.0;
  int iteration = 0;
};

enum class TailStart { none, best_valid, uniform };

struct SolveHistory {
  std::vector<IterationRecord> records;
  std::optional<DensitySnapshot> best_valid;
  std::optional<DensitySnapshot> best_overall;
  int main_iterations = 0;
  bool early_exit = false;
  bool functional_convergence = false;
  TailStart tail_start = TailStart::none;
};

struct SolveResult {
  std::vector<double> density; // physical densities of the last evaluated design
  double compliance = 0.0;
  SolveHistory history;
};

struct ProgressFrame {
  int iteration = 0;
  Phase phase = Phase::main;
  double compliance = 0.0;
  double volume = 0.0;
  double grayness = 0.0;
  double change = 0.0;
  ControlParams params;
  std::shared_ptr<const std::vector<double>> density; // set on frame iterations only
};

struct SolveOptions {
  std::function<void(const ProgressFrame&)> on_progress;
  int frames_every = 0; // 0 disables density frames
  FeOptions fe;
};

/// Filtered and projected densities; passive elements carry their frozen values.
struct Projection {
  std::vector<double> filtered;
  std::vector<double> physical;
};

Projection project(std::span<const double> design, const DensityFilter& filter, double beta,
                   std::span<const PassiveState> mask, double rho_min);

struct OcSettings {
  double volume_fraction = 0.5;
  double delta = 0.2;
  double rho_min = 1e-3;
  double beta = 1.0;
  double volume_tolerance = 1e-4;
  int max_bisection_steps = 200;
};

struct OcResult {
  std::vector<double> design;
  Projection projection;
  double volume = 0.0;
  double lambda = 0.0;
  int bisection_steps = 0;
};

/// Optimality-criteria update with move limit; the Lagrange multiplier is bisected so that
/// the mean projected density over all elements matches the volume fraction.
/// `dc` and `dv` are design-variable sensitivities (already chain-ruled through filter and
/// projection). Throws BISECTION_FAILED when the target is unreachable even without move limits.
OcResult oc_update(std::span<const double> design, std::span<const double> dc, std::span<const double> dv,
                   std::span<const PassiveState> mask, const DensityFilter& filter, const OcSettings& settings);

/// Full design sensitivities of compliance and volume given physical-density gradients.
struct DesignSensitivities {
  std::vector<double> dc;
  std::vector<double> dv;
};
DesignSensitivities chain_rule(std::span<const double> dc_physical, const Projection& projection,
                               const DensityFilter& filter, double beta, std::span<const PassiveState> mask);

/// Initial design: volume fraction on free elements, frozen values on passive ones.
std::vector<double> initial_design(std::span<const PassiveState> mask, double volume_fraction, double rho_min);

/// Main loop driven by the controller, then the sharpening tail if the controller provides one.
/// Propagates SINGULAR_SYSTEM and BISECTION_FAILED with the iteration in the message.
SolveResult solve(const ProblemSpec& spec, const SolverArrays& arrays, Controller& controller,
                  const SolveOptions& options = {});

} // namespace autosimp
