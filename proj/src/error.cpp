#include "cbfshield/error.hpp"

namespace cbfshield {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Validation: return "validation error";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::MaxIterations: return "max iterations";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::ZeroVariance: return "zero variance";
  }
  return "unknown error";
}

}  // namespace cbfshield
