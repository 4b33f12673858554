#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace symentropy {

enum class ErrorCode {
  InvalidArgument,
  EmptyMixture,
  DimensionMismatch,
  NotPositiveDefinite,
  RankDeficient,
  NegativeTime,
  DimensionTooLarge,
  DimensionTooSmall,
  NotSymmetric,
  NotSymmetricBase,
  NotUnivariate,
  LinearlyDependent,
  UnsupportedShape,
  UnsupportedDimension,
  NonFiniteLogDensity,
  NonFiniteScore,
  TruncationInsufficient,
  TooFewSamples,
  NotUnitVector,
  IndexOutOfRange,
  NotBalanced,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyMixture: return "EmptyMixture";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotSymmetricBase: return "NotSymmetricBase";
    case ErrorCode::NotUnivariate: return "NotUnivariate";
    case ErrorCode::LinearlyDependent: return "LinearlyDependent";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::NonFiniteLogDensity: return "NonFiniteLogDensity";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotBalanced: return "NotBalanced";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// All library failures surface as this type; code() identifies the contract
// that was broken, what() carries the offending value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace symentropy
