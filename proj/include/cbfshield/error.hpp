#pragma once

#include <stdexcept>
#include <string>

namespace cbfshield {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Validation,
  Infeasible,
  MaxIterations,
  Io,
  DimensionMismatch,
  ZeroVariance,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for the library. `field_path` is set for configuration
/// errors and names the offending entry, e.g. `limits.lower[2]`.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field_path = {})
      : std::runtime_error(field_path.empty() ? message : field_path + ": " + message),
        code_(code),
        field_path_(std::move(field_path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  ErrorCode code_;
  std::string field_path_;
};

}  // namespace cbfshield
