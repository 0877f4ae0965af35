#pragma once

#include <stdexcept>
#include <string>

namespace kfp {

// Base for everything thrown on purpose by this library, so callers can
// distinguish "bad input / bad math" from genuine bugs.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed arguments: wrong dimensions, non-finite entries, bad ranges.
struct InvalidInput : Error {
  using Error::Error;
};

// Symmetric matrix expected to be positive semidefinite is not.
struct NotPsd : Error {
  using Error::Error;
};

// The time-averaged covariance lost strict positivity somewhere on the
// requested time range, so the kernel formulas below it are meaningless.
struct HypoellipticityViolation : Error {
  using Error::Error;
};

// Riesz-type integral diverges for the requested exponent.
struct DivergentPotential : Error {
  using Error::Error;
};

// A cutoff/tail certificate could not be brought under the error budget.
struct InsufficientCutoff : Error {
  using Error::Error;
};

// Importance sampler cannot cover the integrand's effective support.
struct SamplerCoverage : Error {
  using Error::Error;
};

// Inputs are mutually inconsistent (e.g. zero perimeter with positive mass).
struct Contradiction : Error {
  using Error::Error;
};

// Lookup of a named resource (catalog entry, task name) failed.
struct NotFound : Error {
  using Error::Error;
};

// Configuration text could not be parsed (malformed JSON, missing or
// mistyped keys). Semantic failures of well-formed configs throw
// InvalidInput/NotPsd/... instead, so callers can map the two classes to
// different exit codes.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace kfp
