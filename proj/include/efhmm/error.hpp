#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace efhmm {

enum class ErrorCode {
  invalid_argument,
  parse,
  validation,
  io,
  too_short,
  non_finite,
  protocol,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse";
    case ErrorCode::validation: return "validation";
    case ErrorCode::io: return "io";
    case ErrorCode::too_short: return "too_short";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::protocol: return "protocol";
  }
  return "unknown";
}

/// Library-wide exception. `what()` is a single line of the form
/// "<code>: <detail>" so that tools can forward it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

inline void require(bool condition, ErrorCode code, const std::string& detail) {
  if (!condition) fail(code, detail);
}

}  // namespace efhmm
