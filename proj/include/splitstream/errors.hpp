#pragma once

#include <stdexcept>
#include <string>

namespace splitstream {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A branching law, measure or arrival law violates its invariants.
class InvalidLaw : public Error {
public:
    using Error::Error;
};

/// A split puts all items in one branch (a weight equal to 0 or 1).
class DegenerateSplit : public Error {
public:
    using Error::Error;
};

/// Closed form requested outside its domain (e.g. the p = 1/2 limit).
class NotApplicable : public Error {
public:
    using Error::Error;
};

class PoleError : public Error {
public:
    using Error::Error;
};

/// Fluctuation functions need a lattice (arithmetic) splitting measure.
class NotArithmetic : public Error {
public:
    using Error::Error;
};

/// The determinant does not change sign over the requested bracket.
class NoSignChange : public Error {
public:
    using Error::Error;
};

/// The linear system for the constants is singular or past the first root.
class SingularNearLambdaC : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, flag value or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace splitstream
