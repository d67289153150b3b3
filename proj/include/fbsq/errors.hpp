#pragma once

#include <stdexcept>
#include <string>

namespace fbsq {

/// Base of every error raised by the library. Callers that only care about
/// "something went wrong" catch this; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FBSQ_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

// spectral-core
FBSQ_DEFINE_ERROR(InvalidGrid);
FBSQ_DEFINE_ERROR(GridMismatch);
FBSQ_DEFINE_ERROR(NegativePowerOnNonzeroMean);

// littlewood-paley
FBSQ_DEFINE_ERROR(GridTooCoarse);
FBSQ_DEFINE_ERROR(IndexOutOfRange);
FBSQ_DEFINE_ERROR(EmptySeries);
FBSQ_DEFINE_ERROR(NotDivergenceFree);

// solver
FBSQ_DEFINE_ERROR(CflViolation);
FBSQ_DEFINE_ERROR(NonFiniteState);

// diagnostics
FBSQ_DEFINE_ERROR(NegativeIndexOnNonzeroMean);
FBSQ_DEFINE_ERROR(TooFewSamples);
FBSQ_DEFINE_ERROR(WindowUnresolvable);
FBSQ_DEFINE_ERROR(PreconditionViolated);

// runner / io
FBSQ_DEFINE_ERROR(ConfigInvalid);
FBSQ_DEFINE_ERROR(IoFailure);
FBSQ_DEFINE_ERROR(MissingColumn);

#undef FBSQ_DEFINE_ERROR

/// Raised by the maximum-principle check; carries the offending sample.
class ViolationDetected : public Error {
 public:
  ViolationDetected(double t, double p, const std::string& what)
      : Error(what), t_(t), p_(p) {}
  double time() const noexcept { return t_; }
  double exponent() const noexcept { return p_; }

 private:
  double t_;
  double p_;
};

}  // namespace fbsq
