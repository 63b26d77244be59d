#pragma once

#include <stdexcept>
#include <string>

namespace fputlab {

/// Base class for all library failures that are not plain precondition
/// violations (those throw std::invalid_argument).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate, exponential or accumulated value left the representable range.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// Momentum or displacement sum drifted past the re-centering budget.
class ConstraintDrift : public Error {
public:
    using Error::Error;
};

/// Two independent evaluation routes disagreed beyond tolerance.
class AssertionMismatch : public Error {
public:
    using Error::Error;
};

/// Triangular system with a non-positive pivot.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Root finder could not find a sign change on its search interval.
class NoBracket : public Error {
public:
    using Error::Error;
};

/// Rejection sampler exceeded its consecutive-rejection budget.
class RejectionStall : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature error estimate above the requested tolerance.
class QuadratureNonConvergent : public Error {
public:
    using Error::Error;
};

/// Tilted single-site density cannot be normalized (FPUT with chi = 0).
class NonNormalizable : public Error {
public:
    using Error::Error;
};

/// Power-law fit with fewer than two distinct abscissae.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete configuration file. Carries the offending key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& message)
        : Error(message), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace fputlab
