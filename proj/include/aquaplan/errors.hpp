#pragma once

#include <stdexcept>
#include <string>

namespace aquaplan {

/// Base of every error raised by the library. The CLI maps it to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Queue parameters with lambda >= mu.
class InstabilityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// lambda within the guard band around mu where the closed form is undefined.
class SingularityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Wake-up probability above the configured ceiling.
class ConstraintError : public DomainError {
public:
    using DomainError::DomainError;
};

class FitError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

/// A result escaped its mathematical range by more than rounding could explain.
class InternalError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok)
        throw DomainError(what);
}

} // namespace detail
} // namespace aquaplan
