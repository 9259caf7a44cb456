#pragma once

#include <stdexcept>
#include <string>

namespace sdg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scenario data violates a structural precondition (empty control set,
// non-PSD sigma, unknown family, malformed config).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Time step too coarse for a monotone explicit step.
class CflError : public Error {
public:
    CflError(const std::string& what, long min_time_steps)
        : Error(what), min_time_steps_(min_time_steps) {}
    long min_time_steps() const noexcept { return min_time_steps_; }

private:
    long min_time_steps_;
};

// Lattice stencil would need a negative probability.
class StencilError : public Error {
public:
    using Error::Error;
};

// A solver declined to run because its precondition on the game fails.
class RefusalError : public Error {
public:
    using Error::Error;
};

}  // namespace sdg
