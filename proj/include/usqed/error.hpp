#pragma once

#include <stdexcept>
#include <string>

namespace usqed {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument or parameter set that violates a documented invariant.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Vanishing denominator in a perturbative expression.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Gap minimization bracket holds no interior minimum.
class CrossingNotFound : public Error {
public:
    using Error::Error;
};

/// The ODE integrator could not meet its tolerance.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Experiment configuration rejected during validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace usqed
