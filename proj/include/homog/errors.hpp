#pragma once

#include <stdexcept>
#include <string>

namespace homog {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Config-file parse or schema violations. Messages carry line/field anchors.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Hypothesis checks ((H1)-(H3)) or precondition gates that fail on the data.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Zero-mean (centring) gate violations for cell-oscillatory test factors.
class CentringError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Quadrature cannot resolve the requested oscillation within its budget.
class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures, annotated with the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace homog
