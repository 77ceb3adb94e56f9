#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etsync {

enum class ErrorKind {
  // numerics
  SingularMatrix,
  NotSymmetric,
  NoConvergence,
  NotStabilizable,
  // graph
  NotStronglyConnected,
  SpectralGapViolation,
  // consensus design
  LambdaOutOfRange,
  VarphiNotLessThanOne,
  // regulation
  SingularT,
  NotObservable,
  NotControllable,
  NotHurwitz,
  // simulation
  NonFiniteState,
  ZenoGuardTripped,
  // configuration / io
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Library failure tagged with its kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace etsync
