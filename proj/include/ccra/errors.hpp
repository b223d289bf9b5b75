#pragma once

#include <stdexcept>

namespace ccra {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct EvenKernel : Error { using Error::Error; };
struct NonPositiveSigma : Error { using Error::Error; };
struct KernelTooLarge : Error { using Error::Error; };
struct NonScalarOutput : Error { using Error::Error; };
struct NonFiniteEvaluation : Error { using Error::Error; };
struct InconsistentLayerShapes : Error { using Error::Error; };
struct UnknownVariant : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace ccra
