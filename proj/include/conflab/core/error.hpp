#pragma once

#include <stdexcept>
#include <string>

namespace conflab {

enum class ErrorCode {
  InvalidConfig,
  InvalidDimension,
  InvalidExponent,
  OutOfDomain,
  MissingDerivatives,
  NonPositiveFactor,
  BadDecay,
  UnknownName,
  BadDelta,
  EmptyRegion,
  NoConvergence,
  LineSearchStall,
  Inconsistent,
  PreconditionViolated,
  LostPositivity,
  NotYamabePositive,
  PositivityLoss,
  StallNoDescent,
  InconsistentOutcome,
  IoFailure
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidExponent: return "InvalidExponent";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::MissingDerivatives: return "MissingDerivatives";
    case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::BadDecay: return "BadDecay";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::BadDelta: return "BadDelta";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::LineSearchStall: return "LineSearchStall";
    case ErrorCode::Inconsistent: return "Inconsistent";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::LostPositivity: return "LostPositivity";
    case ErrorCode::NotYamabePositive: return "NotYamabePositive";
    case ErrorCode::PositivityLoss: return "PositivityLoss";
    case ErrorCode::StallNoDescent: return "StallNoDescent";
    case ErrorCode::InconsistentOutcome: return "InconsistentOutcome";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace conflab
