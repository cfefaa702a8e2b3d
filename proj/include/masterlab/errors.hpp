// errors.hpp — Exception hierarchy shared by all masterlab modules.

#pragma once

#include <stdexcept>
#include <string>

namespace masterlab {

/// Caller supplied something the library cannot accept: bad parameters,
/// mismatched dimensions, malformed configuration.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration file problems (strict-schema violations, unknown keys).
class ConfigError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// The numerics broke down: singular formula, failed fit, integrator trouble.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive step size collapsed below the representable resolution.
class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Instantaneous eigenvectors could not be matched between two times.
class AdiabaticityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace masterlab
