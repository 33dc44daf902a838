#pragma once

#include <stdexcept>
#include <string>

namespace rmprice {

/// Malformed or infeasible configuration (bad ranges, unknown keys, parse errors).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input that parsed but violates a domain invariant (non-positive price, empty catalog).
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An internal invariant was broken; indicates a bug rather than bad input.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace rmprice
