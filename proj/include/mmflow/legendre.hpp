#pragma once

#include <cmath>
#include <vector>

#include "mmflow/grid.hpp"
#include "mmflow/surface.hpp"

namespace mmflow {

// Convex profile psi(x) = slope x^2/2 + h(x) with h periodic, so that
// psi'(x+1) = psi'(x) + slope. For a potential phi on background omega this
// is psi = W2 + phi with W2'' = omega, the device that linearizes the
// reduced geodesic equation: in the dual variable the equation becomes
// u_tt = 0.
class LegendreProfile {
  public:
    LegendreProfile() = default;

    LegendreProfile(const SurfaceBackground& bg, const Potential& phi) {
        require_positivity(bg, phi, "LegendreProfile");
        slope_ = bg.volume;
        std::vector<double> h = phi.values;
        if (!bg.metrically_flat) {
            // periodic part of the background primitive: P'' = omega - V
            std::vector<double> w_tilde(bg.n);
            for (int k = 0; k < bg.n; ++k) w_tilde[k] = bg.omega[k] - bg.volume;
            const auto p = solve_periodic_poisson(w_tilde);
            for (int k = 0; k < bg.n; ++k) h[k] += p[k];
        }
        interp_ = TrigInterp(h);
    }

    double slope() const { return slope_; }

    double psi(double x) const { return 0.5 * slope_ * x * x + interp_.eval(x); }

    double grad(double x) const { return slope_ * x + interp_.eval_jet(x).d1; }

    // psi'' = omega + phi_xx; strictly positive on the admissible cone.
    double grad_slope(double x) const { return slope_ + interp_.eval_jet(x).d2; }

    // Solve psi'(x) = p. Monotone Newton with a bisection fallback; aborts
    // if the interpolated profile loses monotonicity (under-resolved data).
    double inverse_grad(double p, double guess) const {
        double x = guess;
        for (int it = 0; it < 100; ++it) {
            const auto jet = interp_.eval_jet(x);
            const double g = slope_ * x + jet.d1 - p;
            const double gp = slope_ + jet.d2;
            if (gp <= 0.5 * kPositivityFloor)
                throw ConvergenceError("LegendreProfile: monotonicity lost during inversion at x=" +
                                       std::to_string(x));
            const double step = g / gp;
            x -= step;
            if (std::abs(step) <= 1e-14 * (1.0 + std::abs(x))) return x;
        }
        return bisect(p, x);
    }

    double inverse_grad(double p) const { return inverse_grad(p, p / slope_); }

    // u(p) = p x(p) - psi(x(p)), the dual value.
    double dual_value(double p, double x_of_p) const { return p * x_of_p - psi(x_of_p); }

  private:
    double bisect(double p, double center) const {
        double lo = center, hi = center, span = 0.25;
        while (grad(lo) > p) lo -= span, span *= 2.0;
        span = 0.25;
        while (grad(hi) < p) hi += span, span *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (grad(mid) < p)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-15 * (1.0 + std::abs(mid))) return mid;
        }
        return 0.5 * (lo + hi);
    }

    double slope_ = 1.0;
    TrigInterp interp_;
};

// One space-time sample of the dual-linear geodesic between two profiles.
struct GeodesicSample {
    double psi;       // full convex profile psi_t(x); phi_t = psi_t - W2
    double velocity;  // d phi / dt at (t, x)
    double p;         // dual coordinate used (warm start for the next call)
};

// Solve (1-t) X0(p) + t X1(p) = x for p, then recover the slice value from
// the dual potential u_t = (1-t) u0 + t u1 and the velocity from the
// envelope identity d psi / dt = -(u1 - u0) at the maximizing p.
inline GeodesicSample legendre_geodesic_sample(const LegendreProfile& a, const LegendreProfile& b,
                                               double t, double x, double p_guess) {
    double p = p_guess;
    double x0 = 0.0, x1 = 0.0;
    for (int it = 0; it < 100; ++it) {
        x0 = a.inverse_grad(p, (it == 0) ? p / a.slope() : x0);
        x1 = b.inverse_grad(p, (it == 0) ? p / b.slope() : x1);
        const double f = (1.0 - t) * x0 + t * x1 - x;
        const double fp = (1.0 - t) / a.grad_slope(x0) + t / b.grad_slope(x1);
        const double step = f / fp;
        p -= step;
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(p))) break;
    }
    x0 = a.inverse_grad(p, x0);
    x1 = b.inverse_grad(p, x1);
    const double u0 = a.dual_value(p, x0);
    const double u1 = b.dual_value(p, x1);
    const double u_t = (1.0 - t) * u0 + t * u1;
    return GeodesicSample{p * x - u_t, u0 - u1, p};
}

// Velocity of the geodesic a -> b at its t=1 endpoint, where the dual
// coordinate is directly p = psi_b'(x): no outer solve needed.
inline std::vector<double> legendre_endpoint_velocity(const SurfaceBackground& bg,
                                                      const LegendreProfile& a,
                                                      const LegendreProfile& b,
                                                      bool at_one) {
    std::vector<double> v(bg.n);
    const LegendreProfile& host = at_one ? b : a;
    const LegendreProfile& other = at_one ? a : b;
    double warm = 0.0;
    for (int k = 0; k < bg.n; ++k) {
        const double x = static_cast<double>(k) / bg.n;
        const double p = host.grad(x);
        const double u_host = host.dual_value(p, x);
        const double x_other = other.inverse_grad(p, (k == 0) ? p / other.slope() : warm);
        warm = x_other;
        const double u_other = other.dual_value(p, x_other);
        v[k] = at_one ? (u_other - u_host) : (u_host - u_other);
    }
    return v;
}

}  // namespace mmflow
