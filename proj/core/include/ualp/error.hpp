#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ualp {

enum class ErrorCode {
  InvalidBox,
  DimensionMismatch,
  NoForeground,
  OutOfBounds,
  ParseError,
  UnknownClass,
  DomainError,
  EmptySplit,
  MissingPredictions,
  ConfigError,
  IoError,
  ValidationFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the toolkit; `code()` selects the failure class
/// so callers (notably the CLI) can map failures onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ualp
