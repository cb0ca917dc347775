#include "billspec/error.hpp"

namespace billspec {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Nonconvex: return "Nonconvex";
    case ErrorCode::ConvexityLost: return "ConvexityLost";
    case ErrorCode::DegenerateConstraint: return "DegenerateConstraint";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::GlancingRay: return "GlancingRay";
    case ErrorCode::RootFindFailure: return "RootFindFailure";
    case ErrorCode::NotPeriodic: return "NotPeriodic";
    case ErrorCode::CoincidentPoints: return "CoincidentPoints";
    case ErrorCode::UnsupportedPeriod: return "UnsupportedPeriod";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::WrongWinding: return "WrongWinding";
    case ErrorCode::NoBranch: return "NoBranch";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::DegenerateOrbit: return "DegenerateOrbit";
    case ErrorCode::SingularHessian: return "SingularHessian";
    case ErrorCode::DiagonalSingularity: return "DiagonalSingularity";
    case ErrorCode::ResolutionTooLow: return "ResolutionTooLow";
    case ErrorCode::ResourceLimit: return "ResourceLimit";
  }
  return "Unknown";
}

}  // namespace billspec
