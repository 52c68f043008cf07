#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "autosimp/control.hpp"
#include "autosimp/llm_backend.hpp"

namespace autosimp {

/// Four-phase deterministic schedule; a pure function of (iteration, budget).
ControlParams schedule_params(int iteration, int budget);
/// Step-wise p ramp, beta held at 1 until p reaches 3.
ControlParams expert_params(int iteration, int budget);
/// Linear p ramp over 30 iterations, beta doubling every 10.
ControlParams three_field_params(int iteration, int budget);

class ScheduleController : public Controller {
public:
  ControllerKind kind() const override { return ControllerKind::schedule; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation& obs) override;
  std::optional<TailConfig> finalize() override { return kStandardTail; }

private:
  ControlParams current_;
};

class ExpertController : public Controller {
public:
  /// Restart to the best valid design when compliance exceeds this multiple of it.
  static constexpr double kSpikeFactor = 5.0;

  ControllerKind kind() const override { return ControllerKind::expert; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation& obs) override;
  std::optional<TailConfig> finalize() override { return kStandardTail; }

private:
  ControlParams current_;
};

class ThreeFieldController : public Controller {
public:
  ControllerKind kind() const override { return ControllerKind::three_field; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation& obs) override;
  std::optional<TailConfig> finalize() override { return kStandardTail; }

private:
  ControlParams current_;
};

class TailOnlyController : public Controller {
public:
  ControllerKind kind() const override { return ControllerKind::tail_only; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation&) override { return {}; }
  std::optional<TailConfig> finalize() override { return kStandardTail; }
};

class FixedController : public Controller {
public:
  ControllerKind kind() const override { return ControllerKind::fixed; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation&) override { return {}; }
  std::optional<TailConfig> finalize() override { return std::nullopt; }
};

/// Bounds applied to every LLM proposal.
struct DncGate {
  double p_min = 1.0, p_max = 4.5;
  double beta_max = 32.0;
  double r_min_lo = 1.0, r_min_hi = 4.0;
  double delta_lo = 0.02, delta_hi = 0.3;
  double gray_threshold = 0.5; // beta increases proposed above this grayness are halved
};

struct DncLogEntry {
  int iteration = 0;
  bool ok = false;
  std::string detail;
};

/// Calls the backend every `cadence` iterations with the recent observation window and
/// applies the gated (p, beta, r_min, delta, restart) proposal. Failures keep the current values.
class LlmController : public Controller {
public:
  LlmController(std::shared_ptr<LlmBackend> backend, LlmBackendConfig config, int cadence = 10, int window = 5);

  ControllerKind kind() const override { return ControllerKind::llm; }
  ControlParams initialize(int budget) override;
  ControllerAction step(const SolverObservation& obs) override;
  std::optional<TailConfig> finalize() override { return kStandardTail; }

  const std::vector<DncLogEntry>& log() const { return log_; }
  /// Gate a raw proposal against the current parameters and observation.
  ControlParams gate(const ControlParams& proposal, const SolverObservation& obs) const;
  /// User message sent to the backend for the current window.
  std::string observation_message(const SolverObservation& obs) const;

private:
  std::shared_ptr<LlmBackend> backend_;
  LlmBackendConfig config_;
  int cadence_;
  std::size_t window_;
  DncGate limits_;
  ControlParams current_;
  std::deque<SolverObservation> recent_;
  std::vector<DncLogEntry> log_;
};

struct ControllerOptions {
  std::shared_ptr<LlmBackend> backend; // llm kind only; null means every call fails
  LlmBackendConfig backend_config;
  int llm_cadence = 10;
};

std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerOptions& options = {});

} // namespace autosimp
