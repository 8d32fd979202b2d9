#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace saltlyap {

/// Bad argument or configuration value. Maps to CLI exit code 2.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for all numerical failures. Maps to CLI exit code 1.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Raised when ||K|| leaves the region where the Cayley map is a valid chart.
class CayleyValidityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A state component overflowed or became NaN. Carries the failing step index.
class NonFiniteStateError : public NumericalError {
public:
    NonFiniteStateError(const std::string& what, std::size_t step)
        : NumericalError(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// File could not be read or written. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace saltlyap
