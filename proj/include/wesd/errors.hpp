#pragma once

#include <stdexcept>
#include <string>

namespace wesd {

/// Machine-readable failure categories. The CLI prints the name verbatim on
/// stderr so scripts can branch on it.
enum class ErrorCode {
  ParseError,
  IoError,
  EmptyForeground,
  UnsupportedDimension,
  DimensionMismatch,
  NormalisationMismatch,
  NegativeBoundBracket,
  DisconnectedGraph,
  NonConvergence,
  LengthShortfall,
  InvalidArgument,
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyForeground: return "EmptyForeground";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NormalisationMismatch: return "NormalisationMismatch";
    case ErrorCode::NegativeBoundBracket: return "NegativeBoundBracket";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::LengthShortfall: return "LengthShortfall";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const char* name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace wesd
