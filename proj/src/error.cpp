#include "propslam/error.hpp"

namespace propslam {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyCloud: return "empty cloud";
    case ErrorCode::kAngleSingularity: return "angle at parameterization singularity";
    case ErrorCode::kDegenerateCorrespondences: return "degenerate correspondence set";
    case ErrorCode::kInsufficientOverlap: return "insufficient overlap";
    case ErrorCode::kUnobservableDirection: return "unobservable direction";
    case ErrorCode::kDanglingEdge: return "dangling edge";
    case ErrorCode::kOptimizationDiverged: return "optimization diverged";
    case ErrorCode::kTrajectoryMismatch: return "trajectory mismatch";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kConfig: return "configuration error";
    case ErrorCode::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace propslam
