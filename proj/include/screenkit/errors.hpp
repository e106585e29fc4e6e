#pragma once

#include <stdexcept>
#include <string>

namespace screenkit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A term or column refers to a variable that does not exist.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Bad argument value (negative threshold, odd DSD size, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A model matrix is rank deficient.
class SingularError : public Error {
public:
    using Error::Error;
};

/// The request would need more memory/time than the guard allows.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// No construction is available for the requested size.
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Floating point breakdown: non-finite values, failed factorization.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Linear program has no feasible point.
class InfeasibleError : public NumericError {
public:
    using NumericError::NumericError;
};

/// A user-supplied output function failed; the message names the run.
class OracleError : public Error {
public:
    using Error::Error;
};

/// Iterative solver gave up.
class IterationLimitError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Malformed input file or command line.
class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace screenkit
