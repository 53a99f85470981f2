#pragma once

#include <cmath>
#include <string_view>
#include <vector>

#include "mmflow/geodesic.hpp"
#include "mmflow/resolvent_config.hpp"
#include "mmflow/tolerance.hpp"

namespace mmflow {

// The reduced space of Kahler potentials as a metric space with the
// K-energy functional. Distances and geodesics go through the Legendre
// dual construction on metrically flat backgrounds and through the
// epsilon-geodesic solver otherwise.
class KahlerSpace {
  public:
    using Point = Potential;

    explicit KahlerSpace(SurfaceBackground bg, ToleranceConfig tol = {}, GeodesicConfig geo = {})
        : bg_(std::move(bg)), tol_(tol), geo_(geo) {
        tol_.validate();
    }

    const SurfaceBackground& background() const { return bg_; }
    const ToleranceConfig& tolerances() const { return tol_; }
    const GeodesicConfig& geodesic_config() const { return geo_; }

    double distance(const Potential& a, const Potential& b) const {
        return mabuchi_distance(bg_, a, b, geo_);
    }

    Potential geodesic(const Potential& a, const Potential& b, double s) const {
        if (bg_.metrically_flat) return geodesic_legendre_point(bg_, a, b, s);
        const auto path = geodesic_epsilon(bg_, a, b, geo_.eps_h, geo_);
        const double pos = s * path.time_slices();
        const int lo = std::max(0, std::min(path.time_slices() - 1, static_cast<int>(pos)));
        const double w = pos - lo;
        Potential out = path.slices[lo];
        for (int k = 0; k < bg_.n; ++k)
            out.values[k] = (1.0 - w) * out.values[k] + w * path.slices[lo + 1][k];
        return out;
    }

    double functional(const Potential& p) const { return k_energy(bg_, p); }
    std::string_view functional_name() const { return "K-energy"; }
    double linear_charge(const Potential& p) const { return functional_i(bg_, p); }

    Potential random_point(Rng& rng, double amplitude = 5e-3) const {
        return random_potential(bg_, rng, amplitude);
    }

    Potential perturb(const Potential& p, Rng& rng, double scale) const {
        const auto bump = random_potential(bg_, rng, scale, 4, false);
        Potential q = p;
        for (int k = 0; k < bg_.n; ++k) q.values[k] += bump[k];
        return q;
    }

    // Endpoint velocity (d gamma/dt at t=1) of the geodesic base -> psi.
    // The dual-variable formula is exact on flat backgrounds; the stencil
    // route differentiates the assembled space-time path and is the
    // generic fallback. Both must agree (tested to 1e-6).
    std::vector<double> endpoint_velocity(const Potential& base, const Potential& psi,
                                          bool via_stencil = false) const {
        if (detail::grid_equal(base, psi)) return std::vector<double>(bg_.n, 0.0);
        if (bg_.metrically_flat && !via_stencil) {
            const LegendreProfile pa(bg_, base), pb(bg_, psi);
            return legendre_endpoint_velocity(bg_, pa, pb, true);
        }
        if (bg_.metrically_flat)
            return geodesic_legendre(bg_, base, psi, geo_.time_slices)
                .endpoint_velocity_stencil(true);
        return geodesic_epsilon(bg_, base, psi, geo_.eps_h, geo_).endpoint_velocity_stencil(true);
    }

    // Gradient of the proximal objective F(psi) = d^2(base,psi)/2tau + nu(psi)
    // in the L^2(omega_psi) pairing: (1/tau) gamma_dot(1) - (s_psi - s_bar).
    std::vector<double> proximal_gradient(const Potential& base, const Potential& psi, double tau,
                                          bool via_stencil = false) const {
        auto g = endpoint_velocity(base, psi, via_stencil);
        const auto s = scalar_curvature(bg_, psi);
        for (int k = 0; k < bg_.n; ++k) g[k] = g[k] / tau - (s[k] - bg_.mean_scalar);
        return g;
    }

    ProximalResult<Potential> proximal_minimize(const Potential& base,
                                                const ResolventConfig& cfg) const {
        if (!(cfg.tau > 0.0)) throw ConfigError("resolvent: tau must be positive");
        if (cfg.tau < kTauFloor)
            throw Error("resolvent: step size below the floor 1e-8, refusing to degrade");
        require_positivity(bg_, base, "resolvent");

        auto out = minimize_from(base, base, cfg);

        if (cfg.certify_unique) {
            Rng rng(cfg.seed ^ 0xa11ce5ull);
            const double scale = std::max(1e-7, 0.3 * out.step_distance);
            bool ok = true;
            for (int trial = 0; trial < 3; ++trial) {
                Potential seed = perturb(base, rng, scale);
                seed = shift_charge(seed, linear_charge(base));
                try {
                    const auto alt = minimize_from(seed, base, cfg);
                    double diff = 0.0;
                    for (int k = 0; k < bg_.n; ++k)
                        diff = std::max(diff, std::abs(alt.point[k] - out.point[k]));
                    ok = ok && alt.certified && diff <= 1e-7;
                } catch (const Error&) {
                    ok = false;
                }
            }
            out.unique_certified = ok && out.certified;
        }
        return out;
    }

  private:
    // Add the constant that moves I(p) to the target value.
    Potential shift_charge(const Potential& p, double i_target) const {
        Potential q = p;
        const double c = (i_target - functional_i(bg_, p)) / bg_.volume;
        for (auto& v : q.values) v += c;
        return q;
    }

    double objective(const Potential& base, const Potential& psi, double tau) const {
        const double d = distance(base, psi);
        return d * d / (2.0 * tau) + functional(psi);
    }

    // Preconditioned descent with Armijo line search, run in the fixed-I
    // slice. The preconditioner is the inverse of the flat-background
    // Hessian 1/tau + (2 pi k)^4 per Fourier mode, which makes the first
    // unit step nearly exact for desk-scale data.
    ProximalResult<Potential> minimize_from(const Potential& start, const Potential& base,
                                            const ResolventConfig& cfg) const {
        const int n = bg_.n;
        const double tau = cfg.tau;
        const double i_target = linear_charge(base);

        Potential psi = shift_charge(start, i_target);
        double f_curr = objective(base, psi, tau);

        ProximalResult<Potential> out;
        out.certified = false;
        bool boundary = false;
        int it = 0;
        double grad_norm = 0.0;
        for (; it < cfg.inner_max_iters; ++it) {
            const auto grad = proximal_gradient(base, psi, tau);
            const auto dens = deformed_density(bg_, psi);
            grad_norm = std::sqrt(integrate_product(grad, grad, dens));
            if (grad_norm <= cfg.inner_tol) {
                out.certified = true;
                break;
            }
            // flat-L2 gradient, preconditioned per Fourier mode
            std::vector<double> g(n);
            for (int k = 0; k < n; ++k) g[k] = grad[k] * dens[k];
            auto ghat = fft_forward(g);
            for (int k = 0; k < n; ++k) {
                const double km = kTwoPi * signed_mode(k, n);
                ghat[k] /= (1.0 / tau + km * km * km * km);
            }
            fft(ghat, true);
            std::vector<double> dir(n);
            for (int k = 0; k < n; ++k) dir[k] = -ghat[k].real();
            // keep the direction tangent to the fixed-I slice
            const double proj = integrate_product(dir, dens) / bg_.volume;
            for (int k = 0; k < n; ++k) dir[k] -= proj;

            double slope = integrate_product(g, dir);
            if (slope >= 0.0) {
                // preconditioner lost descent (should not happen); fall back
                for (int k = 0; k < n; ++k) dir[k] = -g[k];
                slope = -integrate_product(g, g);
            }

            double alpha = 1.0;
            bool accepted = false;
            bool via_armijo = true;
            for (int half = 0; half < 40; ++half) {
                Potential cand = psi;
                for (int k = 0; k < n; ++k) cand.values[k] += alpha * dir[k];
                cand = shift_charge(cand, i_target);
                try {
                    const double f_cand = objective(base, cand, tau);
                    if (f_cand <= f_curr + 1e-4 * alpha * slope) {
                        psi = std::move(cand);
                        f_curr = f_cand;
                        accepted = true;
                        break;
                    }
                } catch (const PositivityError&) {
                    // candidate left the cone: treat as +infinity
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                // Near the minimizer the predicted decrease drops below the
                // floating-point resolution of F and Armijo can no longer
                // certify it; accept the unit step iff it still contracts
                // the gradient norm (the preconditioner is a near-exact
                // Hessian inverse there).
                Potential cand = psi;
                for (int k = 0; k < n; ++k) cand.values[k] += dir[k];
                cand = shift_charge(cand, i_target);
                try {
                    const auto g2 = proximal_gradient(base, cand, tau);
                    const auto dens2 = deformed_density(bg_, cand);
                    const double gn2 = std::sqrt(integrate_product(g2, g2, dens2));
                    if (gn2 < 0.9 * grad_norm) {
                        psi = std::move(cand);
                        f_curr = objective(base, psi, tau);
                        accepted = true;
                        via_armijo = false;
                    }
                } catch (const PositivityError&) {
                }
            }
            if (!accepted) break;
            if (via_armijo && alpha < 1e-2) boundary = true;
        }

        out.point = psi;
        out.point.id = base.id;
        out.iterations = it;
        out.grad_norm = grad_norm;
        out.el_residual = grad_norm;
        out.boundary_hit = boundary;
        out.step_distance = distance(base, psi);
        out.objective = f_curr;
        return out;
    }

    SurfaceBackground bg_;
    ToleranceConfig tol_;
    GeodesicConfig geo_;
};

}  // namespace mmflow
