#pragma once

#include <stdexcept>
#include <string>

namespace ofo {

/// Input files, configs or argument vectors violate a documented schema or
/// precondition. The message carries the offending key path where available.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The power-flow fixed point was not reached within the iteration cap.
/// Signals an infeasible operating point (or a cap that is too small).
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, int iterations)
        : std::runtime_error(what), iterations(iterations) {}
    int iterations;
};

/// An optimization loop (AC-OPF oracle or linear OPF) hit its iteration cap.
class MaxIterations : public std::runtime_error {
public:
    MaxIterations(const std::string& what, int iterations)
        : std::runtime_error(what), iterations(iterations) {}
    int iterations;
};

/// The sampled gradient operator is not strongly monotone on the probed
/// region, so no contractive step size exists there.
class NotMonotoneInRegion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ofo
