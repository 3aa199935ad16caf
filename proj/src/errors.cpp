#include "hermicone/errors.hpp"

#include <cstdio>

namespace hermicone {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownCatalogName: return "UnknownCatalogName";
    case ErrorCode::DegreeOutOfRange: return "DegreeOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ModelInvalid: return "ModelInvalid";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::ModelNotUnimodular: return "ModelNotUnimodular";
    case ErrorCode::ToleranceAmbiguity: return "ToleranceAmbiguity";
    case ErrorCode::ToleranceFailure: return "ToleranceFailure";
    case ErrorCode::NotSKT: return "NotSKT";
    case ErrorCode::NotBalanced: return "NotBalanced";
    case ErrorCode::NotPositive: return "NotPositive";
    case ErrorCode::DegenerateDimension: return "DegenerateDimension";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::KernelJump: return "KernelJump";
    case ErrorCode::DirectionNotAdmissible: return "DirectionNotAdmissible";
    case ErrorCode::EmptyCone: return "EmptyCone";
    case ErrorCode::InfeasibleStart: return "InfeasibleStart";
    case ErrorCode::LineSearchFailure: return "LineSearchFailure";
  }
  return "Error";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError:
    case ErrorCode::UnknownCatalogName:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DegreeOutOfRange:
      return 2;
    case ErrorCode::ModelInvalid:
    case ErrorCode::ModelNotUnimodular:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NotPositive:
    case ErrorCode::DegenerateDimension:
    case ErrorCode::DirectionNotAdmissible:
      return 3;
    case ErrorCode::NotSKT:
    case ErrorCode::NotBalanced:
      return 4;
    case ErrorCode::ToleranceAmbiguity:
    case ErrorCode::ToleranceFailure:
    case ErrorCode::StepTooLarge:
    case ErrorCode::KernelJump:
      return 5;
    case ErrorCode::EmptyCone:
    case ErrorCode::InfeasibleStart:
    case ErrorCode::LineSearchFailure:
      return 6;
  }
  return 1;
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace hermicone
