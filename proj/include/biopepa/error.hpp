#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biopepa {

/// Runtime failure categories. Names are stable and appear in CLI output.
enum class ErrorCode {
  DuplicateLocation,
  UnknownParent,
  CyclicHierarchy,
  UnknownLocation,
  NonpositiveSize,
  DivisionByZero,
  UndefinedParameter,
  CyclicParameter,
  UnresolvedReference,
  NumericOverflow,
  StepUnderflow,
  NegativePropensity,
  UnknownOverride,
  UnknownSelection,
  InvalidArgument,
  Io,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace biopepa
