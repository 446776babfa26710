#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmp {

enum class ErrorKind {
  InvalidArgument,
  NotPositiveDefinite,
  UnstableSystem,
  UnsupportedSmoothness,
  MixedSmoothness,
  DegenerateSeries,
  EmptyData,
  TooFewObservations,
  OptimizerFailed,
  EmptyChain,
  ParseError,
  NonMonotoneTime,
  DuplicateTimestamp,
  DegenerateTruth,
  IoError,
};

/// Coarse grouping used for process exit codes.
enum class ErrorCategory { Validation, Numeric, Io };

std::string_view kind_name(ErrorKind kind) noexcept;
std::string_view category_name(ErrorCategory category) noexcept;
ErrorCategory category_of(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace dmp
