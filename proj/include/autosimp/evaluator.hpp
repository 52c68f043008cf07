#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "autosimp/bc_generator.hpp"
#include "autosimp/mesh.hpp"
#include "autosimp/problem_spec.hpp"
#include "autosimp/simp_solver.hpp"

namespace autosimp {

inline constexpr double kSolidThreshold = 0.5;
inline constexpr double kConnectivityMin = 0.99;
inline constexpr double kComplianceRatioMax = 2.0;
inline constexpr double kGraynessMax = 0.15;
inline constexpr double kVolumeErrorMax = 0.02;
inline constexpr double kStabilityRange = 0.005;
inline constexpr int kStabilityWindow = 15;
inline constexpr double kRetryGrowth = 1.3;

struct ConnectivityResult {
  double fraction = 0.0;
  bool loads_reached = false;
  bool no_solid = false;
  bool pass = false;
};

/// A scalar gate; `evaluated` is false when the input it needs (solve history) is absent.
struct ScalarGate {
  double value = 0.0;
  bool pass = false;
  bool evaluated = true;
};

enum class ConvergenceMode { early_exit, stability, functional, failed, not_evaluated };
std::string_view to_string(ConvergenceMode m);

struct ConvergenceResult {
  ConvergenceMode mode = ConvergenceMode::failed;
  bool pass = false;
  bool evaluated = true;
};

struct QualityMetrics {
  double thin_member_fraction = 0.0;
  double checkerboard_index = 0.0;
  double load_path_efficiency = 0.0;
};

struct RerunHint {
  std::string reason; // convergence | grayness | volume | default
  std::optional<int> max_iterations;
  std::optional<double> volume_fraction;
  bool operator==(const RerunHint&) const = default;
};

struct EvaluationReport {
  ConnectivityResult connectivity;
  ScalarGate compliance_ratio;
  ScalarGate grayness;
  ScalarGate volume_error;
  double volume_actual = 0.0;
  ConvergenceResult convergence;
  QualityMetrics metrics;
  bool pass = false;
  bool partial = false;
  std::optional<RerunHint> hint;
};

/// Flood fill over solid elements (rho > 0.5) from elements touching a fixed-DOF node,
/// 4-connected in 2-D and 6-connected in 3-D.
ConnectivityResult check_connectivity(std::span<const double> rho, const SolverArrays& arrays, const Mesh& mesh);
ScalarGate check_compliance_ratio(const SolveHistory& history);
ScalarGate check_grayness(std::span<const double> rho);
ScalarGate check_volume(std::span<const double> rho, double volume_fraction);
ConvergenceResult check_convergence(const SolveHistory& history);
QualityMetrics compute_metrics(std::span<const double> rho, const SolverArrays& arrays, const Mesh& mesh);

std::optional<RerunHint> make_rerun_hint(const EvaluationReport& report, const ProblemSpec& spec);
/// Working copy of `spec` with the hint applied (not re-validated).
ProblemSpec apply_hint(const ProblemSpec& spec, const RerunHint& hint);

/// Recomputes `partial`, `pass` and `hint` from the gate results.
void finalize_report(EvaluationReport& report, const ProblemSpec& spec);

/// All gates, metrics, pass flag and hint. A null history yields a partial report.
EvaluationReport evaluate(std::span<const double> rho, const ProblemSpec& spec, const SolverArrays& arrays,
                          const SolveHistory* history);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
nlohmann::ordered_json hint_to_json(const RerunHint& hint);

} // namespace autosimp
