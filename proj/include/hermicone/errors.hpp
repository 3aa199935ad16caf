#pragma once

#include <stdexcept>
#include <string>

namespace hermicone {

enum class ErrorCode {
  SchemaError,
  UnknownCatalogName,
  DegreeOutOfRange,
  DimensionMismatch,
  ModelInvalid,
  NotPositiveDefinite,
  ModelNotUnimodular,
  ToleranceAmbiguity,
  ToleranceFailure,
  NotSKT,
  NotBalanced,
  NotPositive,
  DegenerateDimension,
  StepTooLarge,
  KernelJump,
  DirectionNotAdmissible,
  EmptyCone,
  InfeasibleStart,
  LineSearchFailure,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Process exit code for an error class (2 schema, 3 validation, 4 predicate,
/// 5 tolerance, 6 optimizer infeasible).
int exit_code_for(ErrorCode code);

/// Short scientific rendering of a residual for error messages.
std::string sci(double x);

}  // namespace hermicone
