#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autosimp {

enum class ErrorCode {
  reject_no_supports,
  reject_no_loads,
  reject_bad_geometry,
  reject_bad_support,
  reject_bad_load,
  reject_bad_region,
  reject_bad_material,
  parse_error,
  configure_failed,
  fallback_no_archetype,
  singular_system,
  bisection_failed,
  no_solid_elements,
  backend_error,
  invalid_argument,
};

/// Stable upper-case name used on the wire and in logs, e.g. "REJECT_NO_LOADS".
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace autosimp
