#pragma once

#include <stdexcept>
#include <string>

namespace billspec {

enum class ErrorCode {
  InvalidArgument = 1,
  InvalidSpec,
  IoError,
  Nonconvex,
  ConvexityLost,
  DegenerateConstraint,
  RankMismatch,
  GlancingRay,
  RootFindFailure,
  NotPeriodic,
  CoincidentPoints,
  UnsupportedPeriod,
  MaxIterations,
  WrongWinding,
  NoBranch,
  DegenerateFit,
  DegenerateOrbit,
  SingularHessian,
  DiagonalSingularity,
  ResolutionTooLow,
  ResourceLimit,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace billspec
