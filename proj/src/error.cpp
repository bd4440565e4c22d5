#include "ridgerisk/error.hpp"

namespace ridgerisk {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::OutOfRange: return "out of range";
    case ErrorCode::Divergence: return "divergent quantity";
    case ErrorCode::Undefined: return "undefined quantity";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Inconsistent: return "internal inconsistency";
    case ErrorCode::NoSolution: return "no solution";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace ridgerisk
