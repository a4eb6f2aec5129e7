#pragma once

#include <stdexcept>
#include <string>

namespace bdlab {

/// Argument outside an operation's domain (negative density, t < s, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The model violates one of the standing assumptions on g.
class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coupling parameters (c, eta, lambda_K, mu_K) are infeasible.
class ParameterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quadrature, root finding or ODE integration failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration file or value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bdlab
