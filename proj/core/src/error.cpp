#include "ualp/error.hpp"

namespace ualp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoForeground: return "NoForeground";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::MissingPredictions: return "MissingPredictions";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
  }
  return "Unknown";
}

}  // namespace ualp
