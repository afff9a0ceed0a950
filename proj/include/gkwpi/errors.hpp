// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace gkwpi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed space description, schema violation or bad configuration value.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A process is not measurable with respect to the filtration it claims.
class MeasurabilityError : public Error {
public:
    using Error::Error;
};

/// Doob-Meyer input with a negative conditional increment.
class NotSubmartingaleError : public Error {
public:
    using Error::Error;
};

/// Radon-Nikodym numerator charges a block the denominator does not.
class AbsoluteContinuityError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    QuadratureError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}

    double achieved_tolerance() const noexcept { return achieved_; }

private:
    double achieved_;
};

}  // namespace gkwpi
