#include "radfuse/error.hpp"

namespace radfuse {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kParameter: return "parameter";
    case ErrorCategory::kFormat: return "format";
    case ErrorCategory::kInput: return "input";
    case ErrorCategory::kDegenerate: return "degenerate";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kUndefined: return "undefined";
    case ErrorCategory::kNotConverged: return "not-converged";
  }
  return "unknown";
}

}  // namespace radfuse
