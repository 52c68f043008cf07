#pragma once

#include <optional>
#include <string_view>

namespace autosimp {

/// Continuation parameters for one iteration.
struct ControlParams {
  double p = 3.0;     // SIMP penalization
  double beta = 1.0;  // Heaviside sharpness
  double r_min = 1.5; // filter radius, element units
  double delta = 0.2; // OC move limit
  bool restart = false;
  bool operator==(const ControlParams&) const = default;
};

struct TailConfig {
  double p = 4.5;
  double beta = 32.0;
  double r_min = 1.20;
  double delta = 0.05;
  int n_tail = 40;
  double p_gate = 3.0;

  ControlParams params() const { return {p, beta, r_min, delta, false}; }
  bool operator==(const TailConfig&) const = default;
};

/// Shared sharpening tail handed to the solver by every controller except `fixed`.
inline constexpr TailConfig kStandardTail{};
inline constexpr double kValidityGateP = 3.0;

enum class ControllerKind { llm, schedule, expert, three_field, tail_only, fixed };

std::string_view to_string(ControllerKind k);
std::optional<ControllerKind> parse_controller_kind(std::string_view s);

/// Read-only view of the latest iteration, handed to controllers.
struct SolverObservation {
  int iteration = 0; // index of the iteration just completed (0-based)
  int budget = 0;    // main-loop iteration budget
  double compliance = 0.0;
  double volume = 0.0;
  double grayness = 0.0;
  double change = 0.0;
  ControlParams params;
  bool has_best_valid = false;
  double best_valid_compliance = 0.0;
};

struct ControllerAction {
  std::optional<ControlParams> params; // nullopt: keep current parameters
  bool allow_early_exit = false;       // solver may stop once the change metric drops below 0.01
  bool functional_convergence = false; // controller declares the main loop converged
};

/// Pluggable continuation strategy: starting values, per-iteration callback, tail parameters.
class Controller {
public:
  virtual ~Controller() = default;
  virtual ControllerKind kind() const = 0;
  virtual ControlParams initialize(int budget) = 0;
  virtual ControllerAction step(const SolverObservation& obs) = 0;
  virtual std::optional<TailConfig> finalize() = 0;
};

} // namespace autosimp
