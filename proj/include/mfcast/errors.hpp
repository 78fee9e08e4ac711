#pragma once

#include <stdexcept>
#include <string>

namespace mfcast {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid value in the problem domain (non-positive level, zero variance, ...).
struct DomainError : Error {
    using Error::Error;
};

// Matrix/vector dimensions do not agree.
struct ShapeError : Error {
    using Error::Error;
};

// Alignment produced no usable rows or sequences.
struct AlignmentError : Error {
    using Error::Error;
};

// Sampling alignment asked for on data with more than one mismatch ratio.
struct MultipleMismatchError : AlignmentError {
    using AlignmentError::AlignmentError;
};

// Design matrix is rank deficient or an inner linear system is singular.
struct SingularDesignError : Error {
    using Error::Error;
};

// Iterative estimator failed to converge from any start.
struct ConvergenceError : Error {
    using Error::Error;
};

// Overflow or non-finite intermediate despite guards.
struct NumericalError : Error {
    using Error::Error;
};

// Training loss became non-finite.
struct DivergenceError : Error {
    using Error::Error;
};

// Model/hyperparameter selection had nothing valid to choose from.
struct SelectionError : Error {
    using Error::Error;
};

// Loss differential identically zero; DM test undefined.
struct DegenerateComparisonError : Error {
    using Error::Error;
};

// Config file failed schema validation.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mfcast
