#pragma once

#include <stdexcept>
#include <string>

namespace zsclust {

/// Base of every error the toolkit raises. The CLI maps subclasses onto exit
/// codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or an inconsistent pipeline configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Anything wrong with input data: files, arrays, labels.
class DataError : public Error {
public:
    using Error::Error;
};

/// Malformed NPY magic/header or a payload that disagrees with its header.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

/// A value violates a domain invariant (NaN embedding, negative label, ...).
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

/// The input is valid but too degenerate for the requested computation
/// (e.g. a silhouette over a single cluster).
class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

class NumericError : public Error {
public:
    using Error::Error;
};

/// Iterative solver gave up. Carries the number of iterations performed.
class ConvergenceError : public NumericError {
public:
    ConvergenceError(const std::string& what, int iterations)
        : NumericError(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// Rank correlation over a sequence with zero rank variance.
class UndefinedCorrelationError : public NumericError {
public:
    using NumericError::NumericError;
};

class SearchError : public Error {
public:
    using Error::Error;
};

}  // namespace zsclust
