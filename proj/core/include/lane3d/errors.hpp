#pragma once

#include <stdexcept>
#include <string>

namespace lane3d {

enum class ErrorCode {
  DepthNonPositive,
  EmptyGrid,
  LengthMismatch,
  NoVisiblePoints,
  ShapeMismatch,
  UnknownStrategy,
  NonFiniteGradient,
  TooFewLanes,
  InvalidArgument,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

/// Every failure the library raises carries one of the codes above, so
/// callers (and the CLI exit-code mapping) can dispatch without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DepthNonPositive: return "DepthNonPositive";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownStrategy: return "UnknownStrategy";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::TooFewLanes: return "TooFewLanes";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace lane3d
