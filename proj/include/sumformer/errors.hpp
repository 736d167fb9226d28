#pragma once

#include <stdexcept>
#include <string>

namespace sumformer {

// Operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an operation was violated.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input value outside the supported domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class CountOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// A table or enumeration would exceed its configured size budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerically unusable construction (e.g. Performer gram value under/overflow).
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A supposedly symmetric callback changed value under a permutation.
class InvarianceViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Serialized document is malformed or has an unsupported schema version.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sumformer
