#include "etsync/errors.hpp"

namespace etsync {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NotStabilizable: return "NotStabilizable";
    case ErrorKind::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorKind::SpectralGapViolation: return "SpectralGapViolation";
    case ErrorKind::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorKind::VarphiNotLessThanOne: return "VarphiNotLessThanOne";
    case ErrorKind::SingularT: return "SingularT";
    case ErrorKind::NotObservable: return "NotObservable";
    case ErrorKind::NotControllable: return "NotControllable";
    case ErrorKind::NotHurwitz: return "NotHurwitz";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::ZenoGuardTripped: return "ZenoGuardTripped";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace etsync
