#pragma once

#include <stdexcept>
#include <string>

namespace bdps {

// Error taxonomy. The CLI maps these onto distinct exit codes:
// config/parameter/shape -> 2, io -> 3, divergence -> 4, capability -> 5.

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a chain or a training run produces non-finite state.
// Carries the step (or epoch) at which the run went bad.
struct DivergenceError : std::runtime_error {
    long step = -1;
    DivergenceError(const std::string& msg, long step_) : std::runtime_error(msg), step(step_) {}
};

// Requested a combination the implementation deliberately does not support
// (e.g. exact Jensen-gap conditionals for non-Gaussian priors).
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bdps
