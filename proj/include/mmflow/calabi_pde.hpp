#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <thread>
#include <vector>

#include "mmflow/kahler_space.hpp"
#include "mmflow/mm.hpp"
#include "mmflow/surface.hpp"

namespace mmflow {

// Semi-implicit time stepper for d phi/dt = s_phi - s_bar. The linear
// fourth-order part -c d^4 is treated implicitly in Fourier space; the
// remainder explicitly. stabilization = 1 matches the flat-background
// linearization, making the scheme unconditionally linearly stable.
struct PDEConfig {
    double dt = 1e-8;
    double t_end = 1e-4;
    double stabilization = 1.0;
    int record_every = 1;
};

struct CalabiTrajectory {
    std::vector<double> times;
    std::vector<Potential> states;
    std::vector<double> nu;
    std::vector<double> calabi;
    std::vector<std::vector<double>> mode_amplitudes;  // |phi_hat_k|, k = 1..kept
    int modes_kept = 0;
    double c4_monitor = 0.0;  // sup over records of |d^4 phi|_inf
};

namespace detail {

inline void check_pde_stability(const SurfaceBackground& bg, const PDEConfig& cfg) {
    if (!(cfg.dt > 0.0) || cfg.t_end < 0.0)
        throw ConfigError("PDEConfig: need dt > 0 and t_end >= 0");
    const double explicit_coeff = std::max(0.0, 1.0 - cfg.stabilization);
    if (explicit_coeff > 0.0) {
        const double lam = std::pow(std::numbers::pi * bg.n, 4.0) * explicit_coeff;
        if (cfg.dt * lam > 2.0)
            throw ConfigError(
                "PDEConfig: dt exceeds the fourth-order stability bound for the explicit part");
    }
}

// One IMEX step in Fourier space.
inline void calabi_step(const SurfaceBackground& bg, std::vector<double>& phi, double dt,
                        double c_damp, double i_target) {
    const int n = bg.n;
    const auto s = scalar_curvature(bg, Potential(phi));
    std::vector<double> rhs(n);
    for (int k = 0; k < n; ++k) rhs[k] = s[k] - bg.mean_scalar;
    auto phi_hat = fft_forward(phi);
    auto rhs_hat = fft_forward(rhs);
    for (int k = 0; k < n; ++k) {
        const double km = kTwoPi * std::abs(signed_mode(k, n));
        const double k4 = km * km * km * km;
        phi_hat[k] = (phi_hat[k] + dt * (rhs_hat[k] + c_damp * k4 * phi_hat[k])) /
                     (1.0 + c_damp * dt * k4);
    }
    fft(phi_hat, true);
    for (int k = 0; k < n; ++k) phi[k] = phi_hat[k].real();
    // the flow preserves I exactly; re-project the constant mode
    Potential p(phi);
    const double c = (i_target - functional_i(bg, p)) / bg.volume;
    for (auto& v : phi) v += c;
}

}  // namespace detail

// Integrate the flow recording states exactly at the requested times
// (sorted, starting after 0). Used by the comparison harness so that no
// time-interpolation error enters.
inline std::vector<Potential> integrate_calabi_at(const SurfaceBackground& bg,
                                                  const Potential& phi0,
                                                  const std::vector<double>& times,
                                                  const PDEConfig& cfg) {
    detail::check_pde_stability(bg, cfg);
    require_positivity(bg, phi0, "integrate_calabi");
    require_band_limited(phi0, "integrate_calabi");
    const double i_target = functional_i(bg, phi0);
    std::vector<double> phi = phi0.values;
    std::vector<Potential> out;
    double t = 0.0;
    for (double target : times) {
        const double gap = target - t;
        if (gap < -1e-15) throw ConfigError("integrate_calabi_at: times must be sorted");
        if (gap > 1e-15) {
            const int steps = std::max(1, static_cast<int>(std::ceil(gap / cfg.dt - 1e-9)));
            const double dt = gap / steps;
            for (int j = 0; j < steps; ++j) {
                try {
                    detail::calabi_step(bg, phi, dt, cfg.stabilization, i_target);
                } catch (const PositivityError& e) {
                    throw PositivityError("integrate_calabi: positivity lost at t=" +
                                              std::to_string(t + (j + 1) * dt) + "; " + e.what(),
                                          e.index, e.value);
                }
            }
        }
        t = target;
        out.emplace_back(phi);
    }
    return out;
}

inline CalabiTrajectory integrate_calabi(const SurfaceBackground& bg, const Potential& phi0,
                                         const PDEConfig& cfg) {
    detail::check_pde_stability(bg, cfg);
    require_positivity(bg, phi0, "integrate_calabi");
    require_band_limited(phi0, "integrate_calabi");
    const int n_steps = std::max(1, static_cast<int>(std::llround(cfg.t_end / cfg.dt)));
    const double dt = cfg.t_end / n_steps;
    const double i_target = functional_i(bg, phi0);

    CalabiTrajectory traj;
    traj.modes_kept = std::min(8, bg.n / 2 - 1);
    std::vector<double> phi = phi0.values;

    auto record = [&](double t) {
        Potential p(phi);
        traj.times.push_back(t);
        traj.nu.push_back(k_energy(bg, p));
        traj.calabi.push_back(calabi_energy(bg, p));
        auto hat = fft_forward(phi);
        std::vector<double> amps(traj.modes_kept);
        for (int k = 1; k <= traj.modes_kept; ++k) amps[k - 1] = 2.0 * std::abs(hat[k]) / bg.n;
        traj.mode_amplitudes.push_back(std::move(amps));
        traj.c4_monitor = std::max(traj.c4_monitor, sup_norm(spectral_derivative(phi, 4)));
        traj.states.push_back(std::move(p));
    };

    record(0.0);
    for (int j = 0; j < n_steps; ++j) {
        try {
            detail::calabi_step(bg, phi, dt, cfg.stabilization, i_target);
        } catch (const PositivityError& e) {
            throw PositivityError(
                "integrate_calabi: positivity lost at t=" + std::to_string((j + 1) * dt) + "; " +
                    e.what(),
                e.index, e.value);
        }
        if ((j + 1) % std::max(1, cfg.record_every) == 0 || j + 1 == n_steps)
            record((j + 1) * dt);
    }
    return traj;
}

struct ConvergenceRow {
    double tau = 0.0;
    int steps = 0;
    double sup_error = 0.0;  // sup over grid times of |discrete - smooth|_inf
    double coherence = 0.0;  // max_j |phi_{j+1} - phi_j - gamma_dot_j(1)|_inf / tau
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double order = 0.0;
    bool monotone = false;
};

// Discrete flows against the smooth integrator over a decreasing step
// schedule. Schedule entries run concurrently when cores allow.
inline ConvergenceTable compare_discrete_to_smooth(const KahlerSpace& space, const Potential& phi0,
                                                   double t_end,
                                                   const std::vector<double>& tau_schedule,
                                                   const ResolventConfig& res_cfg,
                                                   const PDEConfig& pde_cfg) {
    const auto& bg = space.background();
    for (std::size_t i = 1; i < tau_schedule.size(); ++i)
        if (tau_schedule[i] >= tau_schedule[i - 1])
            throw ConfigError("compare_discrete_to_smooth: schedule must be decreasing");

    // union of all discrete time grids
    std::vector<double> times;
    for (double tau : tau_schedule) {
        const int m = static_cast<int>(std::llround(t_end / tau));
        if (std::abs(m * tau - t_end) > 1e-12 * t_end)
            throw ConfigError("compare_discrete_to_smooth: t_end must be a multiple of each tau");
        for (int j = 1; j <= m; ++j) times.push_back(j * tau);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end(),
                            [&](double a, double b) { return std::abs(a - b) <= 1e-14 * t_end; }),
                times.end());
    const auto smooth = integrate_calabi_at(bg, phi0, times, pde_cfg);
    auto index_of = [&](double t) {
        const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-14 * t_end);
        return static_cast<std::size_t>(it - times.begin());
    };

    auto run_row = [&](double tau) {
        const int m = static_cast<int>(std::llround(t_end / tau));
        const auto trace = discrete_flow(space, phi0, tau, m, res_cfg);
        ConvergenceRow row;
        row.tau = tau;
        row.steps = m;
        for (int j = 1; j <= m; ++j) {
            const auto& smooth_state = smooth[index_of(j * tau)];
            double e = 0.0;
            for (int k = 0; k < bg.n; ++k)
                e = std::max(e, std::abs(trace.iterates[j][k] - smooth_state[k]));
            row.sup_error = std::max(row.sup_error, e);
        }
        for (int j = 0; j < m; ++j) {
            const auto vel = space.endpoint_velocity(trace.iterates[j], trace.iterates[j + 1]);
            double c = 0.0;
            for (int k = 0; k < bg.n; ++k)
                c = std::max(c, std::abs(trace.iterates[j + 1][k] - trace.iterates[j][k] - vel[k]));
            row.coherence = std::max(row.coherence, c / tau);
        }
        return row;
    };

    ConvergenceTable table;
    table.rows.resize(tau_schedule.size());
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 1) {
        std::vector<std::future<ConvergenceRow>> futs;
        for (double tau : tau_schedule)
            futs.push_back(std::async(std::launch::async, run_row, tau));
        for (std::size_t i = 0; i < futs.size(); ++i) table.rows[i] = futs[i].get();
    } else {
        for (std::size_t i = 0; i < tau_schedule.size(); ++i)
            table.rows[i] = run_row(tau_schedule[i]);
    }

    std::vector<double> taus, errs;
    table.monotone = true;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        taus.push_back(table.rows[i].tau);
        errs.push_back(table.rows[i].sup_error);
        if (i > 0 && table.rows[i].sup_error > table.rows[i - 1].sup_error)
            table.monotone = false;
    }
    table.order = fitted_order(taus, errs);
    return table;
}

}  // namespace mmflow
