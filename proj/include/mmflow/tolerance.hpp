#pragma once

#include "mmflow/errors.hpp"

namespace mmflow {

// Shared tolerance knobs. tol_metric is relative (metric identities),
// tol_ineq is an absolute slack added to inequality right-hand sides
// (the compared quantities can be near zero), tol_newton bounds inner
// solver residuals.
struct ToleranceConfig {
    double tol_metric = 1e-8;
    double tol_ineq = 1e-6;
    double tol_newton = 1e-10;

    void validate() const {
        if (tol_metric <= 0 || tol_ineq <= 0 || tol_newton <= 0)
            throw ConfigError("ToleranceConfig: all tolerances must be strictly positive");
    }
};

}  // namespace mmflow
