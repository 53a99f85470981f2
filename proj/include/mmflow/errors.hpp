#pragma once

#include <stdexcept>
#include <string>

namespace mmflow {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input left the admissible cone omega + phi_xx > delta_pos.
struct PositivityError : Error {
    PositivityError(std::string what, int worst_index, double worst_value)
        : Error(std::move(what)), index(worst_index), value(worst_value) {}
    int index;
    double value;
};

// Nonlinear solve gave up; for the epsilon-geodesic solver `last_good`
// carries the smallest epsilon that still converged.
struct ConvergenceError : Error {
    ConvergenceError(std::string what, double last_good_value = 0.0)
        : Error(std::move(what)), last_good(last_good_value) {}
    double last_good;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace mmflow
