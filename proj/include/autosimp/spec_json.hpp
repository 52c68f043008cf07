#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "autosimp/problem_spec.hpp"

namespace autosimp {

using ordered_json = nlohmann::ordered_json;

/// Canonical JSON text (fixed field order, two-space indent).
std::string serialize_spec(const ProblemSpec& spec);
ordered_json spec_to_json(const ProblemSpec& spec);

/// Strict parse: unknown fields and type mismatches throw PARSE_ERROR naming the
/// JSON pointer of the offending field; absent optional fields stay absent.
SpecCandidate deserialize_spec(std::string_view text);
SpecCandidate candidate_from_json(const nlohmann::json& j);

ordered_json rail_log_to_json(const RailLog& log);

} // namespace autosimp
