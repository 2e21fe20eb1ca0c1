#pragma once

#include <stdexcept>
#include <string>

namespace logz {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NonConvergent : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct QuadratureFailure : Error { using Error::Error; };
struct SignCancellation : Error { using Error::Error; };
struct FlatMaximum : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct RegimeError : Error { using Error::Error; };
struct CodebookTooLarge : Error { using Error::Error; };
struct StateSpaceTooLarge : Error { using Error::Error; };
struct ZeroMarginal : Error { using Error::Error; };
struct AlphabetMismatch : Error { using Error::Error; };
struct FormulaDisagreement : Error { using Error::Error; };
struct DegenerateWeights : Error { using Error::Error; };
struct InvalidTailExponent : Error { using Error::Error; };
struct NegativeMmse : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct Unsupported : Error { using Error::Error; };

}  // namespace logz
