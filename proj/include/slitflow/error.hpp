#pragma once

#include <stdexcept>
#include <string>

namespace slitflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an analytic map (|z| >= 1, Im z <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (non-increasing anchors, nonpositive weights, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A proved invariant failed numerically. Indicates a bug, not bad input.
class InternalError : public Error {
public:
    using Error::Error;
};

/// Operation not defined for this solution case (e.g. bridging a non-spiral configuration).
class UnsupportedCaseError : public Error {
public:
    using Error::Error;
};

/// Iterative method failed to converge.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::size_t index, double residual, double parameter = 0.0)
        : Error(what), index_(index), residual_(residual), parameter_(parameter) {}

    /// Index of the target (or root) being processed when the failure happened.
    std::size_t index() const noexcept { return index_; }
    double residual() const noexcept { return residual_; }
    /// Path parameter (time) at which continuation gave up.
    double parameter() const noexcept { return parameter_; }

private:
    std::size_t index_;
    double residual_;
    double parameter_;
};

}  // namespace slitflow
