#pragma once

#include <string>
#include <string_view>

#include "autosimp/llm_backend.hpp"
#include "autosimp/problem_spec.hpp"

namespace autosimp {

struct ConfigureResult {
  ProblemSpec spec;
  RailLog log;
  bool used_fallback = false;
  std::string llm_failure; // why the LLM path was abandoned, empty on success
};

/// Prompt to validated spec. The LLM reply goes through the same validate_spec gate as the
/// regex fallback; any backend, parse or rail failure falls through to the fallback.
/// Throws CONFIGURE_FAILED when both paths fail. `backend` may be null (fallback only).
ConfigureResult configure(std::string_view prompt, LlmBackend* backend, const LlmBackendConfig& config);

/// Keyword parser for the canonical archetypes (cantilever, MBB, bridge, simply supported).
/// Throws FALLBACK_NO_ARCHETYPE.
SpecCandidate regex_fallback(std::string_view prompt);

} // namespace autosimp
