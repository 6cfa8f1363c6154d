#pragma once

#include <stdexcept>
#include <string>

namespace agwp {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A model returned a non-finite value, gradient, or Hessian entry.
class ModelEvaluationError : public Error {
 public:
  using Error::Error;
};

/// cond(A) exceeded the configured cap: Z / amplitude extraction and
/// branch tracking are unreliable this close to a caustic.
class CausticProximityError : public Error {
 public:
  using Error::Error;
};

/// The adaptive step controller stalled below the minimum step size.
class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

/// Two grid functions with different boxes or resolutions were combined.
class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// Too much packet mass lies outside the configured grid box.
class DomainCoverageError : public Error {
 public:
  using Error::Error;
};

/// A matrix claimed to lie in the Siegel half-space fails symmetry or
/// positivity beyond tolerance.
class SiegelViolationError : public Error {
 public:
  using Error::Error;
};

/// A gauge matrix fails the SU(d) conditions beyond tolerance.
class NotUnitaryError : public Error {
 public:
  using Error::Error;
};

/// Newton shooting converged onto a root with singular Jacobian.
class CausticAtRootError : public Error {
 public:
  using Error::Error;
};

/// No shooting start converged; the search box may be too small.
class NoBranchFoundError : public Error {
 public:
  using Error::Error;
};

/// A determinant sign change could not be localized at the trajectory's
/// output resolution.
class UnresolvedCrossingError : public Error {
 public:
  using Error::Error;
};

/// Phase-space lattice would exceed the configured node cap.
class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

/// Split-step spectral stability guard tripped (kinetic phase per step
/// too large).
class StabilityGuardError : public Error {
 public:
  using Error::Error;
};

/// Configuration document failed validation. Carries JSON-pointer-style
/// paths to the offending keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace agwp
