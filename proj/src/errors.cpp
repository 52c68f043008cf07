#include "autosimp/errors.hpp"

namespace autosimp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
  case ErrorCode::reject_no_supports: return "REJECT_NO_SUPPORTS";
  case ErrorCode::reject_no_loads: return "REJECT_NO_LOADS";
  case ErrorCode::reject_bad_geometry: return "REJECT_BAD_GEOMETRY";
  case ErrorCode::reject_bad_support: return "REJECT_BAD_SUPPORT";
  case ErrorCode::reject_bad_load: return "REJECT_BAD_LOAD";
  case ErrorCode::reject_bad_region: return "REJECT_BAD_REGION";
  case ErrorCode::reject_bad_material: return "REJECT_BAD_MATERIAL";
  case ErrorCode::parse_error: return "PARSE_ERROR";
  case ErrorCode::configure_failed: return "CONFIGURE_FAILED";
  case ErrorCode::fallback_no_archetype: return "FALLBACK_NO_ARCHETYPE";
  case ErrorCode::singular_system: return "SINGULAR_SYSTEM";
  case ErrorCode::bisection_failed: return "BISECTION_FAILED";
  case ErrorCode::no_solid_elements: return "NO_SOLID_ELEMENTS";
  case ErrorCode::backend_error: return "BACKEND_ERROR";
  case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

} // namespace autosimp
