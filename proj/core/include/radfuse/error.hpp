#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace radfuse {

/// Coarse failure classes. The CLI maps these onto exit codes and prints the
/// category name on stderr so callers can dispatch without parsing messages.
enum class ErrorCategory {
  kParameter,    // caller passed an out-of-contract argument
  kFormat,       // malformed or unsupported file
  kInput,        // inputs are individually valid but mutually inconsistent
  kDegenerate,   // frame cannot be processed (no radar overlap, collinear gt, ...)
  kNumeric,      // non-finite value inside an optimizer
  kUndefined,    // score/metric/loss over an empty domain
  kNotConverged  // only raised by callers that opt into strict convergence
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
  throw Error(category, what);
}

inline void require(bool condition, ErrorCategory category, const std::string& what) {
  if (!condition) fail(category, what);
}

}  // namespace radfuse
