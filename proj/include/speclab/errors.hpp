#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Objects built over different lattices, or vectors of the wrong length.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Arguments outside the documented domain (negative times, s > 2, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Empty or out-of-range sensor regions.
class InvalidSubdomainError : public Error {
public:
    using Error::Error;
};

// Difference stencils that exhaust the frequency lattice.
class InsufficientCutoffError : public Error {
public:
    using Error::Error;
};

// Operator-norm bounds requested for symbols of nonzero order.
class OrderError : public Error {
public:
    using Error::Error;
};

// Symbols failing positivity/ellipticity during assembly.
class NotEllipticError : public Error {
public:
    using Error::Error;
};

// Singular resolvents, powers of kernels, degenerate bumps, vanishing
// denominators in ratio computations.
class SingularOperatorError : public Error {
public:
    using Error::Error;
};

// Integration contour touching or crossing the spectrum.
class ContourCollisionError : public Error {
public:
    using Error::Error;
};

// Contour tails that cannot converge for the requested exponent.
class TruncationError : public Error {
public:
    using Error::Error;
};

// Mass matrices too singular to invert reliably.
class IllConditionedSensorError : public Error {
public:
    using Error::Error;
};

// Gramians whose smallest eigenvalue underflows entirely.
class UncontrollableTruncationError : public Error {
public:
    using Error::Error;
};

// Control synthesis requested for exponents outside the admissible range.
class InadmissibleExponentError : public Error {
public:
    using Error::Error;
};

// Wave-packet horizons that would overflow hyperbolic weights.
class RescalingError : public Error {
public:
    using Error::Error;
};

// Degenerate least-squares fits.
class FitError : public Error {
public:
    using Error::Error;
};

// Malformed configuration files.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Unreadable inputs or unwritable outputs.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace speclab
