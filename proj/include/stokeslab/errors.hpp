#pragma once

#include <stdexcept>
#include <string>

namespace stokeslab {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inputs that violate a documented precondition (bad orders, malformed
/// configs, hypotheses that do not hold). The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not deliver a trustworthy answer. The CLI maps
/// these to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define STOKESLAB_DEFINE_ERROR(Name, Base)        \
  class Name : public Base {                      \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Base(std::string(#Name ": ") + what) {} \
  };

// series
STOKESLAB_DEFINE_ERROR(ComposeConstantTerm, ValidationError)
STOKESLAB_DEFINE_ERROR(JetBeyondOrder, ValidationError)
STOKESLAB_DEFINE_ERROR(NonFiniteCoefficient, ValidationError)
STOKESLAB_DEFINE_ERROR(OrderMismatch, ValidationError)

// odesys
STOKESLAB_DEFINE_ERROR(InvalidSystem, ValidationError)
STOKESLAB_DEFINE_ERROR(SingularLinearPart, ValidationError)
STOKESLAB_DEFINE_ERROR(DivisibilityFailure, NumericError)

// resum
STOKESLAB_DEFINE_ERROR(NonzeroConstantTerm, ValidationError)
STOKESLAB_DEFINE_ERROR(TooFewCoefficients, ValidationError)
STOKESLAB_DEFINE_ERROR(DegenerateTable, NumericError)
STOKESLAB_DEFINE_ERROR(PoleOnRay, NumericError)
STOKESLAB_DEFINE_ERROR(NonDecayingIntegrand, ValidationError)

// stokes
STOKESLAB_DEFINE_ERROR(OutOfSector, ValidationError)
STOKESLAB_DEFINE_ERROR(FitDiverged, NumericError)
STOKESLAB_DEFINE_ERROR(InconsistentSamples, NumericError)
STOKESLAB_DEFINE_ERROR(MissingDirection, ValidationError)

// dynamics
STOKESLAB_DEFINE_ERROR(BlowUp, NumericError)
STOKESLAB_DEFINE_ERROR(StepUnderflow, NumericError)
STOKESLAB_DEFINE_ERROR(ZeroSample, ValidationError)
STOKESLAB_DEFINE_ERROR(UndersampledArc, ValidationError)

// probes
STOKESLAB_DEFINE_ERROR(InvalidPolynomial, ValidationError)
STOKESLAB_DEFINE_ERROR(DegreeBoundViolated, ValidationError)
STOKESLAB_DEFINE_ERROR(DuplicatePolynomials, ValidationError)
STOKESLAB_DEFINE_ERROR(NonpositiveLeading, ValidationError)
STOKESLAB_DEFINE_ERROR(InsufficientOrder, ValidationError)
STOKESLAB_DEFINE_ERROR(RangeExceeded, ValidationError)

#undef STOKESLAB_DEFINE_ERROR

}  // namespace stokeslab
