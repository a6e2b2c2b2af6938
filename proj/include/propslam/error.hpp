#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace propslam {

enum class ErrorCode {
  kEmptyCloud,
  kAngleSingularity,
  kDegenerateCorrespondences,
  kInsufficientOverlap,
  kUnobservableDirection,
  kDanglingEdge,
  kOptimizationDiverged,
  kTrajectoryMismatch,
  kParse,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception type used throughout the library. `code()` identifies the failure
/// class so callers can branch without matching on message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace propslam
