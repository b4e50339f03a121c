#pragma once

#include <stdexcept>
#include <string>

namespace asyncfb {

/// Caller broke a documented precondition (shape mismatch, bad index).
struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A numeric parameter lies outside its admissible range.
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An iterative inner solve stopped before reaching its tolerance.
struct ConvergenceFailure : std::runtime_error {
    ConvergenceFailure(const std::string& what, double residual_)
        : std::runtime_error(what + " (residual " + std::to_string(residual_) + ")"), residual(residual_) {}
    double residual;
};

/// Iterate norm blew past the divergence guard.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, long iteration_)
        : std::runtime_error(what), iteration(iteration_) {}
    long iteration;
};

/// Coordinator buffer transition applied in a state that does not allow it.
struct ProtocolViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// An agent could not be scheduled within the declared delay bound.
struct BoundedDelayViolation : std::runtime_error {
    BoundedDelayViolation(const std::string& what, int agent_, long epoch_)
        : std::runtime_error(what), agent(agent_), epoch(epoch_) {}
    int agent;
    long epoch;
};

/// Malformed or inconsistent file/config input.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace asyncfb
