#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmflow/legendre.hpp"
#include "mmflow/linalg.hpp"
#include "mmflow/surface.hpp"

namespace mmflow {

struct GeodesicConfig {
    int time_slices = 64;     // M_t
    double eps_h = 0.02;      // base epsilon for curved-background extrapolation
    double tol_newton = 1e-10;
};

// Space-time grid of potentials with the energy element per slice.
// epsilon == 0 marks an exact (dual-linear) geodesic.
struct GeodesicPath {
    std::vector<Potential> slices;
    std::vector<std::vector<double>> velocity;  // d phi/dt per slice
    std::vector<double> energy;                 // E(t_m)
    double epsilon = 0.0;
    double residual = 0.0;  // sup-norm of the reduced geodesic equation

    int time_slices() const { return static_cast<int>(slices.size()) - 1; }

    double e_drift() const {
        const auto [lo, hi] = std::minmax_element(energy.begin(), energy.end());
        return *hi - *lo;
    }

    // Path length ∫ sqrt(E) dt by the trapezoid rule.
    double length() const {
        const int m = time_slices();
        double s = 0.5 * (std::sqrt(std::max(energy.front(), 0.0)) +
                          std::sqrt(std::max(energy.back(), 0.0)));
        for (int i = 1; i < m; ++i) s += std::sqrt(std::max(energy[i], 0.0));
        return s / m;
    }

    // One-sided 3-point endpoint derivative on the time grid.
    std::vector<double> endpoint_velocity_stencil(bool at_one) const {
        const int m = time_slices();
        const double dt = 1.0 / m;
        const int n = slices.front().size();
        std::vector<double> v(n);
        if (at_one) {
            const auto& f0 = slices[m].values;
            const auto& f1 = slices[m - 1].values;
            const auto& f2 = slices[m - 2].values;
            for (int k = 0; k < n; ++k) v[k] = (3.0 * f0[k] - 4.0 * f1[k] + f2[k]) / (2.0 * dt);
        } else {
            const auto& f0 = slices[0].values;
            const auto& f1 = slices[1].values;
            const auto& f2 = slices[2].values;
            for (int k = 0; k < n; ++k) v[k] = (-3.0 * f0[k] + 4.0 * f1[k] - f2[k]) / (2.0 * dt);
        }
        return v;
    }
};

namespace detail {

inline double slice_energy(const SurfaceBackground& bg, const Potential& slice,
                           const std::vector<double>& vel) {
    const auto dens = deformed_density(bg, slice);
    std::vector<double> f(bg.n);
    for (int k = 0; k < bg.n; ++k) f[k] = vel[k] * vel[k] * dens[k];
    return integrate(f);
}

// sup |(omega + phi_xx) phi_tt - phi_tx^2 - eps omega| over interior slices,
// with centered differences in t and spectral derivatives in x. This is an
// independent check of a produced path, not part of its construction.
inline double path_residual(const SurfaceBackground& bg, const std::vector<Potential>& s,
                            double eps) {
    const int m = static_cast<int>(s.size()) - 1;
    const double dt = 1.0 / m;
    double worst = 0.0;
    for (int i = 1; i < m; ++i) {
        const int n = bg.n;
        std::vector<double> phitt(n), phit(n);
        for (int k = 0; k < n; ++k) {
            phitt[k] = (s[i + 1][k] - 2.0 * s[i][k] + s[i - 1][k]) / (dt * dt);
            phit[k] = (s[i + 1][k] - s[i - 1][k]) / (2.0 * dt);
        }
        const auto phitx = spectral_derivative(phit, 1);
        const auto dens = deformed_density(bg, s[i]);
        for (int k = 0; k < n; ++k) {
            const double r = dens[k] * phitt[k] - phitx[k] * phitx[k] - eps * bg.omega[k];
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

inline bool grid_equal(const Potential& a, const Potential& b) {
    if (a.size() != b.size()) return false;
    for (int k = 0; k < a.size(); ++k)
        if (a[k] != b[k]) return false;
    return true;
}

inline GeodesicPath constant_path(const SurfaceBackground& bg, const Potential& phi, int mt) {
    GeodesicPath path;
    path.slices.assign(mt + 1, phi);
    path.velocity.assign(mt + 1, std::vector<double>(bg.n, 0.0));
    path.energy.assign(mt + 1, 0.0);
    return path;
}

}  // namespace detail

// Exact geodesic on a metrically flat background through Legendre duality:
// the dual potential interpolates linearly in t and each slice is recovered
// by inverting the dual gradient, value level included.
inline GeodesicPath geodesic_legendre(const SurfaceBackground& bg, const Potential& phi0,
                                      const Potential& phi1, int mt = 64) {
    if (!bg.metrically_flat)
        throw ConfigError("geodesic_legendre: background must be metrically flat");
    if (mt < 4) throw ConfigError("geodesic_legendre: need at least 4 time slices");
    require_positivity(bg, phi0, "geodesic_legendre");
    require_positivity(bg, phi1, "geodesic_legendre");
    if (detail::grid_equal(phi0, phi1)) return detail::constant_path(bg, phi0, mt);

    const LegendreProfile pa(bg, phi0), pb(bg, phi1);
    const LegendreProfile base(bg, Potential::zero(bg.n));

    GeodesicPath path;
    path.slices.resize(mt + 1);
    path.velocity.resize(mt + 1);
    path.energy.resize(mt + 1);

    path.slices[0] = phi0;
    path.slices[mt] = phi1;
    path.velocity[0] = legendre_endpoint_velocity(bg, pa, pb, false);
    path.velocity[mt] = legendre_endpoint_velocity(bg, pa, pb, true);

    for (int i = 1; i < mt; ++i) {
        const double t = static_cast<double>(i) / mt;
        std::vector<double> vals(bg.n), vel(bg.n);
        double p_warm = 0.0;
        for (int k = 0; k < bg.n; ++k) {
            const double x = static_cast<double>(k) / bg.n;
            const double guess = (k == 0) ? (1.0 - t) * pa.grad(x) + t * pb.grad(x) : p_warm;
            const auto smp = legendre_geodesic_sample(pa, pb, t, x, guess);
            p_warm = smp.p;
            vals[k] = smp.psi - base.psi(x);
            vel[k] = smp.velocity;
        }
        path.slices[i] = Potential(std::move(vals));
        path.velocity[i] = std::move(vel);
    }
    for (int i = 0; i <= mt; ++i)
        path.energy[i] = detail::slice_energy(bg, path.slices[i], path.velocity[i]);
    path.residual = detail::path_residual(bg, path.slices, 0.0);

    const double e0 = path.energy.front();
    const double guard = 1e-8 * e0 + 1e-13 * std::sqrt(std::max(e0, 0.0)) + 1e-20;
    if (path.e_drift() > guard)
        throw ConvergenceError("geodesic_legendre: energy element drift " +
                               std::to_string(path.e_drift()) + " exceeds guard");
    return path;
}

// One slice of the exact geodesic, for the space contract.
inline Potential geodesic_legendre_point(const SurfaceBackground& bg, const Potential& phi0,
                                         const Potential& phi1, double t) {
    if (!bg.metrically_flat)
        throw ConfigError("geodesic_legendre_point: background must be metrically flat");
    if (t == 0.0) return phi0;
    if (t == 1.0) return phi1;
    if (detail::grid_equal(phi0, phi1)) return phi0;
    const LegendreProfile pa(bg, phi0), pb(bg, phi1);
    const LegendreProfile base(bg, Potential::zero(bg.n));
    std::vector<double> vals(bg.n);
    double p_warm = 0.0;
    for (int k = 0; k < bg.n; ++k) {
        const double x = static_cast<double>(k) / bg.n;
        const double guess = (k == 0) ? (1.0 - t) * pa.grad(x) + t * pb.grad(x) : p_warm;
        const auto smp = legendre_geodesic_sample(pa, pb, t, x, guess);
        p_warm = smp.p;
        vals[k] = smp.psi - base.psi(x);
    }
    return Potential(std::move(vals));
}

// Damped Newton solve of the epsilon-geodesic boundary value problem
//   (omega + phi_xx) phi_tt - phi_tx^2 = eps * omega
// on the space-time grid, with continuation in eps from 1 downward.
// Spectral in x, second order in t, block-tridiagonal linearization.
class EpsilonGeodesicSolver {
  public:
    EpsilonGeodesicSolver(const SurfaceBackground& bg, GeodesicConfig cfg = {})
        : bg_(bg), cfg_(cfg), dx_(build_derivative_matrix(bg.n, 1)),
          dxx_(build_derivative_matrix(bg.n, 2)) {}

    GeodesicPath solve(const Potential& phi0, const Potential& phi1, double eps) const {
        if (!(eps > 0.0)) throw ConfigError("geodesic_epsilon: eps must be positive");
        const int mt = cfg_.time_slices;
        if (mt < 8) throw ConfigError("geodesic_epsilon: need at least 8 time slices");
        require_positivity(bg_, phi0, "geodesic_epsilon");
        require_positivity(bg_, phi1, "geodesic_epsilon");

        // initial guess: straight line in t
        std::vector<std::vector<double>> s(mt + 1, std::vector<double>(bg_.n));
        for (int m = 0; m <= mt; ++m) {
            const double t = static_cast<double>(m) / mt;
            for (int k = 0; k < bg_.n; ++k) s[m][k] = (1.0 - t) * phi0[k] + t * phi1[k];
        }

        // direct attempt first; fall back to continuation from large eps
        {
            auto trial = s;
            if (newton(trial, eps)) return assemble(trial, eps);
        }
        double last_good = 0.0;
        double e = std::max(eps, 1.0);
        double factor = 4.0;
        int refinements = 0;
        while (true) {
            auto trial = s;
            if (newton(trial, e)) {
                s = std::move(trial);
                last_good = e;
                if (e == eps) break;
                e = std::max(eps, e / factor);
            } else {
                if (++refinements > 6)
                    throw ConvergenceError(
                        "geodesic_epsilon: Newton failed; last good eps = " +
                            std::to_string(last_good),
                        last_good);
                factor = std::sqrt(factor);
                e = (last_good > 0.0) ? std::max(eps, last_good / factor) : e * 2.0;
            }
        }
        return assemble(s, eps);
    }

  private:
    static Matrix build_derivative_matrix(int n, int order) {
        Matrix d(n, n);
        std::vector<double> unit(n, 0.0);
        for (int j = 0; j < n; ++j) {
            unit[j] = 1.0;
            const auto col = spectral_derivative(unit, order);
            unit[j] = 0.0;
            for (int i = 0; i < n; ++i) d(i, j) = col[i];
        }
        return d;
    }

    // residual and positivity state of a candidate space-time grid
    bool residual(const std::vector<std::vector<double>>& s, double eps,
                  std::vector<std::vector<double>>& r, double& sup) const {
        const int mt = static_cast<int>(s.size()) - 1;
        const double dt = 1.0 / mt;
        const int n = bg_.n;
        sup = 0.0;
        for (int m = 1; m < mt; ++m) {
            const auto dens = deformed_density(bg_, Potential(s[m]));
            for (int k = 0; k < n; ++k)
                if (dens[k] <= kPositivityFloor) return false;
            std::vector<double> phit(n);
            for (int k = 0; k < n; ++k) phit[k] = (s[m + 1][k] - s[m - 1][k]) / (2.0 * dt);
            const auto phitx = spectral_derivative(phit, 1);
            for (int k = 0; k < n; ++k) {
                const double phitt = (s[m + 1][k] - 2.0 * s[m][k] + s[m - 1][k]) / (dt * dt);
                r[m - 1][k] = dens[k] * phitt - phitx[k] * phitx[k] - eps * bg_.omega[k];
                sup = std::max(sup, std::abs(r[m - 1][k]));
            }
        }
        return true;
    }

    bool newton(std::vector<std::vector<double>>& s, double eps) const {
        const int mt = static_cast<int>(s.size()) - 1;
        const int n = bg_.n;
        std::vector<std::vector<double>> r(mt - 1, std::vector<double>(n));
        double sup = 0.0;
        if (!residual(s, eps, r, sup)) return false;
        for (int it = 0; it < 40; ++it) {
            if (sup <= cfg_.tol_newton) return true;
            const auto delta = solve_linear(s, r);
            // backtracking on the residual norm
            double alpha = 1.0;
            bool accepted = false;
            for (int half = 0; half < 30; ++half) {
                auto trial = s;
                for (int m = 1; m < mt; ++m)
                    for (int k = 0; k < n; ++k) trial[m][k] -= alpha * delta[m - 1][k];
                std::vector<std::vector<double>> rt(mt - 1, std::vector<double>(n));
                double sup_t = 0.0;
                if (residual(trial, eps, rt, sup_t) && sup_t < sup * (1.0 - 1e-4 * alpha)) {
                    s = std::move(trial);
                    r = std::move(rt);
                    sup = sup_t;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return sup <= cfg_.tol_newton * 10.0;
        }
        return sup <= cfg_.tol_newton;
    }

    // Block-tridiagonal Thomas elimination with dense N x N blocks.
    std::vector<std::vector<double>> solve_linear(const std::vector<std::vector<double>>& s,
                                                  const std::vector<std::vector<double>>& r) const {
        const int mt = static_cast<int>(s.size()) - 1;
        const int n = bg_.n;
        const double dt = 1.0 / mt;
        const int blocks = mt - 1;

        std::vector<Matrix> gain(blocks);  // A~_m^{-1} B_m
        std::vector<std::vector<double>> rhs(blocks), sol(blocks, std::vector<double>(n));
        std::vector<Matrix> sub(blocks), super(blocks), diag(blocks);
        for (int m = 1; m < mt; ++m) {
            const auto dens = deformed_density(bg_, Potential(s[m]));
            std::vector<double> phit(n), phitt(n);
            for (int k = 0; k < n; ++k) {
                phit[k] = (s[m + 1][k] - s[m - 1][k]) / (2.0 * dt);
                phitt[k] = (s[m + 1][k] - 2.0 * s[m][k] + s[m - 1][k]) / (dt * dt);
            }
            const auto phitx = spectral_derivative(phit, 1);
            Matrix a(n, n), b(n, n), c(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    a(i, j) = phitt[i] * dxx_(i, j);
                    const double cross = phitx[i] * dx_(i, j) / dt;
                    b(i, j) = -cross;
                    c(i, j) = cross;
                }
                a(i, i) += -2.0 * dens[i] / (dt * dt);
                b(i, i) += dens[i] / (dt * dt);
                c(i, i) += dens[i] / (dt * dt);
            }
            diag[m - 1] = std::move(a);
            super[m - 1] = std::move(b);
            sub[m - 1] = std::move(c);
        }

        // forward sweep
        for (int m = 0; m < blocks; ++m) {
            Matrix a = diag[m];
            std::vector<double> rb = r[m];
            for (auto& v : rb) v = -v;  // solving J delta = -R with delta subtracted later
            if (m > 0) {
                // a -= C_m * gain_{m-1};  rb -= C_m * rhs_{m-1}
                const Matrix corr = matmul(sub[m], gain[m - 1]);
                for (std::size_t idx = 0; idx < a.a.size(); ++idx) a.a[idx] -= corr.a[idx];
                const auto cv = matvec(sub[m], rhs[m - 1]);
                for (int i = 0; i < n; ++i) rb[i] -= cv[i];
            }
            const Lu lu(std::move(a));
            if (m < blocks - 1) gain[m] = lu.solve_matrix(super[m]);
            rhs[m] = lu.solve(rb);
        }
        // back substitution
        sol[blocks - 1] = rhs[blocks - 1];
        for (int m = blocks - 2; m >= 0; --m) {
            const auto gv = matvec(gain[m], sol[m + 1]);
            for (int i = 0; i < n; ++i) sol[m][i] = rhs[m][i] - gv[i];
        }
        // delta enters as s - alpha*delta, so flip sign back: J delta = R form
        for (auto& block : sol)
            for (auto& v : block) v = -v;
        return sol;
    }

    GeodesicPath assemble(const std::vector<std::vector<double>>& s, double eps) const {
        const int mt = static_cast<int>(s.size()) - 1;
        const int n = bg_.n;
        const double dt = 1.0 / mt;
        GeodesicPath path;
        path.epsilon = eps;
        path.slices.reserve(mt + 1);
        for (int m = 0; m <= mt; ++m) path.slices.emplace_back(s[m]);
        path.velocity.assign(mt + 1, std::vector<double>(n));
        // fourth-order time derivatives keep the measured E-drift clean of
        // discretization noise
        for (int m = 0; m <= mt; ++m) {
            for (int k = 0; k < n; ++k) {
                double v;
                if (m >= 2 && m <= mt - 2) {
                    v = (-s[m + 2][k] + 8.0 * s[m + 1][k] - 8.0 * s[m - 1][k] + s[m - 2][k]) /
                        (12.0 * dt);
                } else if (m == 0) {
                    v = (-25.0 * s[0][k] + 48.0 * s[1][k] - 36.0 * s[2][k] + 16.0 * s[3][k] -
                         3.0 * s[4][k]) /
                        (12.0 * dt);
                } else if (m == 1) {
                    v = (-3.0 * s[0][k] - 10.0 * s[1][k] + 18.0 * s[2][k] - 6.0 * s[3][k] +
                         s[4][k]) /
                        (12.0 * dt);
                } else if (m == mt - 1) {
                    v = (3.0 * s[mt][k] + 10.0 * s[mt - 1][k] - 18.0 * s[mt - 2][k] +
                         6.0 * s[mt - 3][k] - s[mt - 4][k]) /
                        (12.0 * dt);
                } else {
                    v = (25.0 * s[mt][k] - 48.0 * s[mt - 1][k] + 36.0 * s[mt - 2][k] -
                         16.0 * s[mt - 3][k] + 3.0 * s[mt - 4][k]) /
                        (12.0 * dt);
                }
                path.velocity[m][k] = v;
            }
        }
        path.energy.resize(mt + 1);
        for (int m = 0; m <= mt; ++m)
            path.energy[m] = detail::slice_energy(bg_, path.slices[m], path.velocity[m]);
        path.residual = detail::path_residual(bg_, path.slices, eps);
        return path;
    }

    const SurfaceBackground& bg_;
    GeodesicConfig cfg_;
    Matrix dx_;
    Matrix dxx_;
};

inline GeodesicPath geodesic_epsilon(const SurfaceBackground& bg, const Potential& phi0,
                                     const Potential& phi1, double eps,
                                     GeodesicConfig cfg = {}) {
    return EpsilonGeodesicSolver(bg, cfg).solve(phi0, phi1, eps);
}

// Distance between two potentials. Metrically flat backgrounds use the
// exact dual construction (energy element at both endpoints, averaged so
// that the result is symmetric by construction); curved backgrounds use
// Richardson extrapolation of epsilon-geodesic lengths at {4h, 2h, h}.
inline double mabuchi_distance(const SurfaceBackground& bg, const Potential& phi0,
                               const Potential& phi1, GeodesicConfig cfg = {}) {
    require_positivity(bg, phi0, "mabuchi_distance");
    require_positivity(bg, phi1, "mabuchi_distance");
    if (detail::grid_equal(phi0, phi1)) return 0.0;
    if (bg.metrically_flat) {
        const LegendreProfile pa(bg, phi0), pb(bg, phi1);
        const auto v0 = legendre_endpoint_velocity(bg, pa, pb, false);
        const auto v1 = legendre_endpoint_velocity(bg, pa, pb, true);
        const double e0 = detail::slice_energy(bg, phi0, v0);
        const double e1 = detail::slice_energy(bg, phi1, v1);
        return 0.5 * (std::sqrt(e0) + std::sqrt(e1));
    }
    const EpsilonGeodesicSolver solver(bg, cfg);
    // scale the extrapolation levels to the endpoint separation so that the
    // eps forcing stays a small perturbation of the connecting path
    std::vector<double> diff(bg.n);
    for (int k = 0; k < bg.n; ++k) diff[k] = phi1[k] - phi0[k];
    const double h = cfg.eps_h * std::max(sup_norm(diff), 1e-9);
    const double l4 = solver.solve(phi0, phi1, 4.0 * h).length();
    const double l2 = solver.solve(phi0, phi1, 2.0 * h).length();
    const double l1 = solver.solve(phi0, phi1, h).length();
    return (8.0 * l1 - 6.0 * l2 + l4) / 3.0;
}

// d/ds of s -> d(base, phi(s)): the endpoint-velocity pairing divided by
// sqrt(E) at t = 1. `dphi_ds` is the analytic derivative of the family.
inline double distance_first_variation(const SurfaceBackground& bg, const Potential& base,
                                       const Potential& phi_s, const std::vector<double>& dphi_ds,
                                       GeodesicConfig cfg = {}) {
    require_positivity(bg, base, "distance_first_variation");
    require_positivity(bg, phi_s, "distance_first_variation");
    std::vector<double> v1;
    if (bg.metrically_flat) {
        const LegendreProfile pa(bg, base), pb(bg, phi_s);
        v1 = legendre_endpoint_velocity(bg, pa, pb, true);
    } else {
        v1 = geodesic_epsilon(bg, base, phi_s, cfg.eps_h, cfg).endpoint_velocity_stencil(true);
    }
    const auto dens = deformed_density(bg, phi_s);
    const double e1 = integrate_product(v1, v1, dens);
    if (e1 <= 1e-24)
        throw Error("distance_first_variation: zero-distance base point, derivative undefined");
    return integrate_product(dphi_ds, v1, dens) / std::sqrt(e1);
}

}  // namespace mmflow
