#include "biopepa/error.hpp"

namespace biopepa {

std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DuplicateLocation: return "DUPLICATE_LOCATION";
    case ErrorCode::UnknownParent: return "UNKNOWN_PARENT";
    case ErrorCode::CyclicHierarchy: return "CYCLIC_HIERARCHY";
    case ErrorCode::UnknownLocation: return "UNKNOWN_LOCATION";
    case ErrorCode::NonpositiveSize: return "NONPOSITIVE_SIZE";
    case ErrorCode::DivisionByZero: return "DIVISION_BY_ZERO";
    case ErrorCode::UndefinedParameter: return "UNDEFINED_PARAMETER";
    case ErrorCode::CyclicParameter: return "CYCLIC_PARAMETER";
    case ErrorCode::UnresolvedReference: return "UNRESOLVED_REFERENCE";
    case ErrorCode::NumericOverflow: return "NUMERIC_OVERFLOW";
    case ErrorCode::StepUnderflow: return "STEP_UNDERFLOW";
    case ErrorCode::NegativePropensity: return "NEGATIVE_PROPENSITY";
    case ErrorCode::UnknownOverride: return "UNKNOWN_OVERRIDE";
    case ErrorCode::UnknownSelection: return "UNKNOWN_SELECTION";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace biopepa
