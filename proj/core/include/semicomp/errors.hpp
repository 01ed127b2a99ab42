#pragma once

#include <stdexcept>
#include <string>

namespace semicomp {

// Input data violates the observable-space constraints (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NumericFailure {
  NonFiniteLikelihood,
  NonFiniteQ,
  EmptyRiskSet,
  NonFiniteLoss,
  DivergedLoss,
  OptimizerFailure,
  ZeroWeight,
  FoldTooSmall,
  TooManyFailures,
};

const char* to_string(NumericFailure kind);

// A computation produced (or would produce) a non-finite or undefined value
// (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  NumericError(NumericFailure kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  NumericFailure kind() const noexcept { return kind_; }

 private:
  NumericFailure kind_;
};

}  // namespace semicomp
