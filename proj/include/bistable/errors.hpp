#pragma once

#include <stdexcept>

namespace bistable {

/// Raised when a potential family receives parameters outside its admissible range.
class InvalidPotential : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot produce a trustworthy answer.
class NumericalFailure : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A running simulation hit an abort condition (NaN, blow-up, solver breakdown,
/// front leaving the safe region of the domain).
class NumericalAbort : public NumericalFailure
{
  public:
    using NumericalFailure::NumericalFailure;
};

/// A field does not decay at the right boundary, so weighted integrals are meaningless.
class TailNotDecayed : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

}  // namespace bistable
