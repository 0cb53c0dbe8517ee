#pragma once

#include <stdexcept>
#include <string>

namespace p3b {

// Base class for all library-specific failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input configuration touches the singular set (some r_ij below the cutoff).
class CollisionError : public Error {
public:
    using Error::Error;
};

// Attempt to normalize the zero configuration.
class ZeroConfigurationError : public Error {
public:
    using Error::Error;
};

// normalize() requires a centered configuration.
class NotCenteredError : public Error {
public:
    using Error::Error;
};

// Root bracketing / refinement stalled.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// A classifier was asked to decide a quantity sitting numerically on its
// decision boundary.
class BoundaryError : public Error {
public:
    using Error::Error;
};

// The negative-direction certificate requires a spiraling mass ratio.
class NotSpiralingError : public Error {
public:
    using Error::Error;
};

// Adaptive step size underflowed (typically near collision).
class StepFailure : public Error {
public:
    using Error::Error;
};

// Constraint residual exceeded the blow-up threshold during integration.
class ConstraintBlowup : public Error {
public:
    using Error::Error;
};

// Chart-dependent quantity evaluated where the chart is singular (radial <= 0).
class SingularChartError : public Error {
public:
    using Error::Error;
};

// A nominally hyperbolic eigenvalue has numerically vanishing real part.
class DegenerateSpectrumError : public Error {
public:
    using Error::Error;
};

// Quadrature error estimate exceeded its tolerance.
class QuadratureError : public Error {
public:
    using Error::Error;
};

// Requested time window is not covered by the available trajectory samples.
class WindowError : public Error {
public:
    using Error::Error;
};

// Operation requires t > 0.
class NonPositiveTimeError : public Error {
public:
    using Error::Error;
};

} // namespace p3b
