#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankone {

enum class ErrorCode {
  DimensionMismatch,
  ZOutOfBounds,
  NonPositiveParams,
  TooLarge,
  UnregisteredVariable,
  StatusNotOptimal,
  UnsupportedCone,
  ParseError,
  NotMiqpShaped,
  NotContinuous,
  InvalidSpec,
  XNotPsd,
  EquivalenceViolation,
  InvalidDecomposition,
  DegenerateDirection,
  TauOutOfRange,
  BadFractions,
  LabelDomainError,
  UndefinedGap,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZOutOfBounds: return "ZOutOfBounds";
    case ErrorCode::NonPositiveParams: return "NonPositiveParams";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::UnregisteredVariable: return "UnregisteredVariable";
    case ErrorCode::StatusNotOptimal: return "StatusNotOptimal";
    case ErrorCode::UnsupportedCone: return "UnsupportedCone";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotMiqpShaped: return "NotMiqpShaped";
    case ErrorCode::NotContinuous: return "NotContinuous";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::XNotPsd: return "XNotPsd";
    case ErrorCode::EquivalenceViolation: return "EquivalenceViolation";
    case ErrorCode::InvalidDecomposition: return "InvalidDecomposition";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::TauOutOfRange: return "TauOutOfRange";
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::LabelDomainError: return "LabelDomainError";
    case ErrorCode::UndefinedGap: return "UndefinedGap";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception type thrown by every module. `code()` identifies the contract
/// violation; `line()` is set by the file parsers (1-based, 0 when unknown).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::size_t line = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace rankone
