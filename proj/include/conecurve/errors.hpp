#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conecurve {

enum class ErrorCode {
  InvalidConfig,
  RhsFailure,
  NonSpacelike,
  NotOnConstraint,
  ZeroState,
  CurvatureSingular,
  NoFixedPoints,
  ApexSingular,
  NoFrameFound,
  OutOfDomain,
  CurvatureZero,
  PoleAtRoot,
  DegenerateAlpha,
  InvalidSpec,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::RhsFailure: return "RhsFailure";
    case ErrorCode::NonSpacelike: return "NonSpacelike";
    case ErrorCode::NotOnConstraint: return "NotOnConstraint";
    case ErrorCode::ZeroState: return "ZeroState";
    case ErrorCode::CurvatureSingular: return "CurvatureSingular";
    case ErrorCode::NoFixedPoints: return "NoFixedPoints";
    case ErrorCode::ApexSingular: return "ApexSingular";
    case ErrorCode::NoFrameFound: return "NoFrameFound";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::CurvatureZero: return "CurvatureZero";
    case ErrorCode::PoleAtRoot: return "PoleAtRoot";
    case ErrorCode::DegenerateAlpha: return "DegenerateAlpha";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
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

}  // namespace conecurve
