#include "autosimp/controllers.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "autosimp/prompts.hpp"

namespace autosimp {

std::string_view to_string(ControllerKind k) {
  switch (k) {
  case ControllerKind::llm: return "llm";
  case ControllerKind::schedule: return "schedule";
  case ControllerKind::expert: return "expert";
  case ControllerKind::three_field: return "three_field";
  case ControllerKind::tail_only: return "tail_only";
  case ControllerKind::fixed: return "fixed";
  }
  return "unknown";
}

std::optional<ControllerKind> parse_controller_kind(std::string_view s) {
  for (auto k : {ControllerKind::llm, ControllerKind::schedule, ControllerKind::expert, ControllerKind::three_field,
                 ControllerKind::tail_only, ControllerKind::fixed})
    if (to_string(k) == s) return k;
  if (s == "three-field") return ControllerKind::three_field;
  if (s == "tail-only") return ControllerKind::tail_only;
  return std::nullopt;
}

ControlParams schedule_params(int iteration, int budget) {
  const double n = std::max(1, budget);
  const double k = iteration;
  if (k < 0.25 * n) return {1.5, 1.0, 2.4, 0.2, false};
  if (k < 0.55 * n) {
    const double t = (k - 0.25 * n) / (0.30 * n);
    return {1.5 + 2.0 * t, 2.0, 2.0, 0.15, false};
  }
  if (k < 0.8 * n) {
    const double t = (k - 0.55 * n) / (0.25 * n);
    const int sub = std::min(3, static_cast<int>(std::floor(4.0 * t)));
    return {3.5 + 1.0 * t, 2.0 * std::ldexp(1.0, sub), 1.5, 0.1, false};
  }
  return {4.5, 16.0, 1.3, 0.08, false};
}

ControlParams expert_params(int iteration, int budget) {
  const double n = std::max(1, budget);
  const double interval = 0.8 * n / 7.0;
  const int s = std::min(6, static_cast<int>(std::floor(iteration / interval)));
  ControlParams c{1.5 + 0.5 * s, 1.0, 2.0, 0.2, false};
  if (c.p >= 3.0) {
    const double since = iteration - 3.0 * interval;
    const int doublings = std::max(0, static_cast<int>(std::floor(since / (0.1 * n))));
    c.beta = std::min(16.0, std::ldexp(1.0, std::min(doublings, 4)));
    c.delta = 0.1;
    if (c.beta >= 8.0) c.r_min = 1.5;
  }
  return c;
}

ControlParams three_field_params(int iteration, int budget) {
  const double n = std::max(1, budget);
  ControlParams c;
  c.p = std::min(4.5, 1.0 + 3.5 * iteration / 30.0);
  c.beta = std::min(16.0, std::ldexp(1.0, std::min(4, iteration / 10)));
  const bool late = iteration >= 0.8 * n;
  c.r_min = late ? 1.5 : 2.4;
  c.delta = late ? 0.1 : 0.2;
  return c;
}

namespace {

ControllerAction change_to(ControlParams& current, const ControlParams& next) {
  ControllerAction a;
  if (!(next == current)) {
    current = next;
    a.params = next;
  }
  return a;
}

} // namespace

ControlParams ScheduleController::initialize(int budget) { return current_ = schedule_params(0, budget); }

ControllerAction ScheduleController::step(const SolverObservation& obs) {
  return change_to(current_, schedule_params(obs.iteration + 1, obs.budget));
}

ControlParams ExpertController::initialize(int budget) { return current_ = expert_params(0, budget); }

ControllerAction ExpertController::step(const SolverObservation& obs) {
  ControlParams next = expert_params(obs.iteration + 1, obs.budget);
  if (obs.has_best_valid && obs.compliance > kSpikeFactor * obs.best_valid_compliance) {
    current_ = next;
    next.restart = true;
    return {next, false, false};
  }
  return change_to(current_, next);
}

ControlParams ThreeFieldController::initialize(int budget) { return current_ = three_field_params(0, budget); }

ControllerAction ThreeFieldController::step(const SolverObservation& obs) {
  return change_to(current_, three_field_params(obs.iteration + 1, obs.budget));
}

ControlParams TailOnlyController::initialize(int) { return {1.0, 1.0, 2.4, 0.2, false}; }

ControlParams FixedController::initialize(int) { return {3.0, 1.0, 2.4, 0.2, false}; }

LlmController::LlmController(std::shared_ptr<LlmBackend> backend, LlmBackendConfig config, int cadence, int window)
    : backend_(std::move(backend)), config_(std::move(config)), cadence_(std::max(1, cadence)),
      window_(static_cast<std::size_t>(std::max(1, window))) {}

ControlParams LlmController::initialize(int) {
  recent_.clear();
  log_.clear();
  return current_ = {1.5, 1.0, 2.4, 0.2, false};
}

ControlParams LlmController::gate(const ControlParams& proposal, const SolverObservation& obs) const {
  ControlParams g;
  g.p = std::clamp(proposal.p, limits_.p_min, limits_.p_max);
  const double prev = current_.beta;
  double beta = std::clamp(proposal.beta, prev, std::min(2.0 * prev, std::max(prev, limits_.beta_max)));
  if (beta > prev && obs.grayness > limits_.gray_threshold) beta = prev + 0.5 * (beta - prev);
  g.beta = beta;
  g.r_min = std::clamp(proposal.r_min, limits_.r_min_lo, limits_.r_min_hi);
  g.delta = std::clamp(proposal.delta, limits_.delta_lo, limits_.delta_hi);
  g.restart = proposal.restart && obs.has_best_valid;
  return g;
}

std::string LlmController::observation_message(const SolverObservation& obs) const {
  nlohmann::ordered_json doc;
  doc["budget"] = obs.budget;
  doc["iteration"] = obs.iteration;
  doc["current"] = {{"p", current_.p}, {"beta", current_.beta}, {"r_min", current_.r_min}, {"delta", current_.delta}};
  doc["best_valid_exists"] = obs.has_best_valid;
  if (obs.has_best_valid) doc["best_valid_compliance"] = obs.best_valid_compliance;
  auto& window = doc["observations"] = nlohmann::ordered_json::array();
  for (const auto& o : recent_)
    window.push_back({{"iteration", o.iteration},
                      {"compliance", o.compliance},
                      {"volume", o.volume},
                      {"grayness", o.grayness},
                      {"change", o.change},
                      {"p", o.params.p},
                      {"beta", o.params.beta},
                      {"r_min", o.params.r_min},
                      {"delta", o.params.delta}});
  return doc.dump();
}

ControllerAction LlmController::step(const SolverObservation& obs) {
  recent_.push_back(obs);
  while (recent_.size() > window_) recent_.pop_front();
  if ((obs.iteration + 1) % cadence_ != 0) return {};

  DncLogEntry entry{obs.iteration, false, {}};
  if (!backend_) {
    entry.detail = "no backend configured";
    log_.push_back(entry);
    return {};
  }
  try {
    const std::string reply = backend_->complete(
        {{"system", std::string(prompts::kDncSystemV1)}, {"user", observation_message(obs)}}, config_);
    const auto body = extract_json_object(reply);
    if (!body) throw std::runtime_error("no JSON object in reply");
    const auto j = nlohmann::json::parse(*body);
    ControlParams proposal = current_;
    proposal.restart = false;
    if (j.contains("p")) proposal.p = j.at("p").get<double>();
    if (j.contains("beta")) proposal.beta = j.at("beta").get<double>();
    if (j.contains("r_min")) proposal.r_min = j.at("r_min").get<double>();
    if (j.contains("delta")) proposal.delta = j.at("delta").get<double>();
    if (j.contains("restart")) proposal.restart = j.at("restart").get<bool>();
    for (double v : {proposal.p, proposal.beta, proposal.r_min, proposal.delta})
      if (!std::isfinite(v)) throw std::runtime_error("non-finite value in reply");

    const ControlParams gated = gate(proposal, obs);
    entry.ok = true;
    entry.detail = reply;
    log_.push_back(entry);
    ControlParams next = gated;
    next.restart = false;
    current_ = next;
    ControllerAction action;
    action.params = gated;
    return action;
  } catch (const std::exception& e) {
    entry.detail = e.what();
    log_.push_back(entry);
    return {};
  }
}

std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerOptions& options) {
  switch (kind) {
  case ControllerKind::llm:
    return std::make_unique<LlmController>(options.backend, options.backend_config, options.llm_cadence);
  case ControllerKind::schedule: return std::make_unique<ScheduleController>();
  case ControllerKind::expert: return std::make_unique<ExpertController>();
  case ControllerKind::three_field: return std::make_unique<ThreeFieldController>();
  case ControllerKind::tail_only: return std::make_unique<TailOnlyController>();
  case ControllerKind::fixed: return std::make_unique<FixedController>();
  }
  return nullptr;
}

} // namespace autosimp
