#pragma once

#include <stdexcept>
#include <string>

namespace archdse {

/// Base class for all errors raised by the framework.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Configuration file or schema problems; maps to CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Incrementing a parameter that is already at its last candidate.
struct AtMaximum : Error {
  using Error::Error;
};

/// Sum of rule firing strengths underflowed; membership centers are out of range.
struct DegenerateFiring : Error {
  using Error::Error;
};

/// Policy asked to choose among zero selectable parameters.
struct EmptyMask : Error {
  using Error::Error;
};

/// Softmin produced a non-positive IPC; tau is too large for the bound scale.
struct NonPositiveIpc : Error {
  using Error::Error;
};

struct UnknownGroup : Error {
  using Error::Error;
};

struct UnknownParam : Error {
  using Error::Error;
};

/// External evaluator errors; map to CLI exit code 4.
struct EvaluatorError : Error {
  using Error::Error;
};

struct EvaluatorTimeout : EvaluatorError {
  using EvaluatorError::EvaluatorError;
};

struct EvaluatorCrash : EvaluatorError {
  using EvaluatorError::EvaluatorError;
};

struct MalformedResponse : EvaluatorError {
  using EvaluatorError::EvaluatorError;
};

struct BudgetExhausted : Error {
  using Error::Error;
};

/// A weight became non-finite during training.
struct DivergenceDetected : Error {
  using Error::Error;
};

/// No design satisfies the area constraint.
struct InfeasibleSpace : Error {
  using Error::Error;
};

}  // namespace archdse
