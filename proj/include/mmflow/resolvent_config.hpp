#pragma once

#include <cstdint>
#include <string>

namespace mmflow {

// Below this step size the engine reports failure instead of silently
// degrading.
inline constexpr double kTauFloor = 1e-8;

struct ResolventConfig {
    double tau = 1e-4;
    int inner_max_iters = 400;
    double inner_tol = 1e-9;  // gradient norm of the proximal objective
    std::string inner_method = "preconditioned-descent";
    std::uint64_t seed = 0x6d6d666c6f77ull;  // drives every randomized probe

    // Test-mode certificates.
    int probe_count = 0;          // optimality probes per resolvent call
    bool certify_unique = false;  // restart from 3 perturbed seeds

    ResolventConfig with_tau(double t) const {
        ResolventConfig c = *this;
        c.tau = t;
        return c;
    }
};

// Outcome of one proximal minimization W_tau(phi).
template <class PointT>
struct ProximalResult {
    PointT point;
    double objective = 0.0;      // F_{phi,tau} at the minimizer (the mu value)
    double grad_norm = 0.0;      // final inner gradient norm
    double el_residual = 0.0;    // Euler-Lagrange residual in the space's norm
    double step_distance = 0.0;  // d(phi, W_tau(phi))
    int iterations = 0;
    bool certified = true;       // inner solve converged below inner_tol
    bool boundary_hit = false;   // line search was forced below 1/100 step
    double probe_margin = 0.0;   // min over probes of F(probe) - F(minimizer)
    bool unique_certified = false;
};

}  // namespace mmflow
