#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnc {

enum class ErrorCode {
  SchemaError,
  VersionError,
  ConfigError,
  InvalidGraph,
  PreconditionError,
  NonPositiveOutputLength,
  CycleDetected,
  UnfusablePadding,
  DegenerateVariance,
  InteriorSoftmax,
  AllZero,
  MissingStats,
  ShapeMismatch,
  FormatMismatch,
  UnsupportedLayer,
  EmptyDataset,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for every module; `code()` identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nnc
