#include "dmp/error.hpp"

namespace dmp {

std::string_view kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::UnstableSystem: return "UnstableSystem";
    case ErrorKind::UnsupportedSmoothness: return "UnsupportedSmoothness";
    case ErrorKind::MixedSmoothness: return "MixedSmoothness";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::TooFewObservations: return "TooFewObservations";
    case ErrorKind::OptimizerFailed: return "OptimizerFailed";
    case ErrorKind::EmptyChain: return "EmptyChain";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorKind::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorKind::DegenerateTruth: return "DegenerateTruth";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view category_name(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Validation: return "validation";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::UnstableSystem:
    case ErrorKind::OptimizerFailed:
      return ErrorCategory::Numeric;
    case ErrorKind::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Validation;
  }
}

}  // namespace dmp
