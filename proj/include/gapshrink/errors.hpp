#pragma once

#include <stdexcept>
#include <string>

namespace gapshrink {

/// Operand shapes disagree with each other or with a penalty's domain.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this penalty kind.
struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

/// A caller-side precondition was violated.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Argument lies outside the mathematical domain (e.g. log of zero).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// No feasible point exists for a constrained oracle.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure such as a non-positive-definite factorization.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver hit its iteration cap before reaching tolerance.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string &what, double last_residual)
        : std::runtime_error(what), residual(last_residual) {}
    double residual;
};

} // namespace gapshrink
