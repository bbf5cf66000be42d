#pragma once

#include <stdexcept>
#include <string>

namespace kinetic {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid sizes, malformed config blocks, unknown keys.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::string key = {})
        : Error(msg), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Violated operation precondition (grid mismatch, sector rules, windows).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Quadrature non-convergence, ill-conditioned solves, failed fits.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Branch tracking lost continuity between consecutive wavenumbers.
class TrackingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace kinetic
