#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ffpr {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (crop larger than field, mismatched operands, ...).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A translation would push nonzero content outside the frame.
class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class EmptySupportError : public Error {
public:
    using Error::Error;
};

/// The DC Fourier coefficient is too small for phase transfer to be defined.
class VanishingDcError : public Error {
public:
    explicit VanishingDcError(const std::string& what, std::ptrdiff_t record = -1)
        : Error(what), record_(record) {}
    std::ptrdiff_t record() const noexcept { return record_; }

private:
    std::ptrdiff_t record_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Training loss became NaN or infinite.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable dataset container.
class ContainerError : public Error {
public:
    enum class Kind { Io, BadMagic, BadVersion, Truncated, Inhomogeneous };

    ContainerError(Kind kind, const std::string& what, std::ptrdiff_t record = -1)
        : Error(what), kind_(kind), record_(record) {}

    Kind kind() const noexcept { return kind_; }
    /// Index of the offending record, or -1 when the header itself is at fault.
    std::ptrdiff_t record() const noexcept { return record_; }

private:
    Kind kind_;
    std::ptrdiff_t record_;
};

}  // namespace ffpr
