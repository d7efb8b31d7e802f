#pragma once

#include <stdexcept>
#include <string>

namespace kaczmarz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (shape mismatch, bad count).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A block of rows is linearly dependent (numerically).
class DegenerateBlock : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class ZeroRow : public Error {
public:
    using Error::Error;
};

/// Every candidate row is parallel to the current one; no admissible next row.
class AllParallel : public Error {
public:
    using Error::Error;
};

class DegenerateWeights : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed, or its contents could not be parsed.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace kaczmarz
