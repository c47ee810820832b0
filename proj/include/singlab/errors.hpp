#pragma once

#include <stdexcept>
#include <string>

namespace singlab {

// Base class for every error raised by the library. Subclasses correspond to
// the distinct failure modes a caller may want to catch individually; the CLI
// maps them onto process exit codes (numerical/singularity failures -> 2,
// configuration/usage failures -> 2 as well, check failures -> 1).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of the operation
// (e.g. a time outside [0,1], s >= t for a transition, t = 0 for a score).
struct DomainError : Error {
    using Error::Error;
};

// A requested coefficient diverges at the evaluation point: the drift
// f = d log(alpha)/dt and g^2 = -2 f blow up where alpha = 0 (t = 1), as does
// the derivative of sqrt-shaped schedules at their endpoint.
struct DivergentCoefficient : Error {
    using Error::Error;
};

// A sampler update is structurally singular at the requested time: the
// noise-prediction step divides by alpha_t and cannot be taken at alpha_t = 0.
struct SingularStep : Error {
    using Error::Error;
};

// A density was requested where the distribution has no density (the
// mixture at t = 0 is a sum of point masses).
struct DegenerateDensity : Error {
    using Error::Error;
};

// Numerical quadrature failed to reach the requested error estimate within
// its refinement budget.
struct QuadratureUnconverged : Error {
    using Error::Error;
};

// Training diverged: the minibatch loss increased for many consecutive steps.
struct DivergenceDetected : Error {
    using Error::Error;
};

// A class label was requested that the model/training set does not contain.
struct UnknownLabel : Error {
    using Error::Error;
};

// A configuration file failed validation (unknown key, wrong type, bad value).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace singlab
