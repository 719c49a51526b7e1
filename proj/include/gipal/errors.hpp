#pragma once

#include <stdexcept>
#include <string>

namespace gipal {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or length mismatch between tensors, layers, or argument lists.
struct DimensionError : Error {
    using Error::Error;
};

// Non-finite values where finite reals are required.
struct NumericError : Error {
    using Error::Error;
};

// Layer or sample index out of range.
struct IndexError : Error {
    using Error::Error;
};

// An operation that requires at least one element received none.
struct EmptyInputError : Error {
    using Error::Error;
};

// Scalar argument outside its legal interval.
struct RangeError : Error {
    using Error::Error;
};

// A class label at or above the declared class count.
struct LabelRangeError : Error {
    using Error::Error;
};

// No eligible mixup partner for a sample.
struct PairingError : Error {
    using Error::Error;
};

// Malformed text input; message carries the byte offset where parsing stopped.
struct ParseError : Error {
    using Error::Error;
};

// Binary payload shorter or longer than its declared size.
struct LengthError : Error {
    using Error::Error;
};

// Filesystem-level failure; message carries the path.
struct IoError : Error {
    using Error::Error;
};

// Training loss became non-finite; message names the epoch.
struct TrainingDivergedError : Error {
    using Error::Error;
};

// Cluster statistic is undefined (coincident centroids, too few classes).
struct DegenerateClusterError : Error {
    using Error::Error;
};

// Too few grid points for a quadrature or windowed integral.
struct InsufficientGridError : Error {
    using Error::Error;
};

// CMI score undefined; message names the conditioning set.
struct UndefinedScoreError : Error {
    using Error::Error;
};

} // namespace gipal
