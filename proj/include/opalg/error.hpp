#pragma once

#include <stdexcept>
#include <string>

namespace opalg {

enum class ErrorKind {
  WeightSum,
  Shape,
  NotSelfAdjoint,
  NumericalFailure,
  NotAModule,
  Identification,
  Mass,
  NotAutomorphism,
  NotTracePreserving,
  RelationViolated,
  SubalgebraNotInvariant,
  NotErgodic,
  NotAbelian,
  BudgetExceeded,
  PositivityViolation,
  Face,
  NotAnAlgebra,
  NotCentral,
  CPViolation,
  IterationLimit,
  EmptyF,
  UnknownCommand,
  Parse,
  InvalidArgument,
};

const char* error_name(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// 2 = validation, 3 = numeric assertion, 4 = budget
int exit_code_for(ErrorKind k);

}  // namespace opalg
