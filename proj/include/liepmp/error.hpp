#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace liepmp {

enum class ErrorCode {
  InvalidAlgebraMatrix,
  InvalidGroupElement,
  LogBranchCut,
  DimensionMismatch,
  InvalidSpec,
  InconsistentTrajectory,
  BoundaryMismatch,
  SubmersionRankError,
  NonConcaveHamiltonian,
  NoConvergence,
  SingularJacobian,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidAlgebraMatrix: return "InvalidAlgebraMatrix";
    case ErrorCode::InvalidGroupElement: return "InvalidGroupElement";
    case ErrorCode::LogBranchCut: return "LogBranchCut";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InconsistentTrajectory: return "InconsistentTrajectory";
    case ErrorCode::BoundaryMismatch: return "BoundaryMismatch";
    case ErrorCode::SubmersionRankError: return "SubmersionRankError";
    case ErrorCode::NonConcaveHamiltonian: return "NonConcaveHamiltonian";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Exception type thrown by every module; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace liepmp
