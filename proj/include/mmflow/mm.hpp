#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mmflow/resolvent_config.hpp"
#include "mmflow/space_checks.hpp"
#include "mmflow/surface.hpp"
#include "mmflow/tolerance.hpp"

namespace mmflow {

template <class S>
concept ProximalSpace =
    MetricSpace<S> && requires(const S& s, const typename S::Point& p, const ResolventConfig& c) {
        { s.proximal_minimize(p, c) } -> std::same_as<ProximalResult<typename S::Point>>;
        { s.linear_charge(p) } -> std::convertible_to<double>;
    };

// One Moreau-Yosida step W_tau(phi); adds optimality probes on top of the
// space's own minimizer when the config asks for them.
template <ProximalSpace S>
ProximalResult<typename S::Point> resolvent(const S& space, const typename S::Point& phi,
                                            const ResolventConfig& cfg) {
    auto res = space.proximal_minimize(phi, cfg);
    if (cfg.probe_count > 0) {
        Rng rng(cfg.seed ^ 0x9e0beull);
        const double scale = std::max(1e-7, 0.5 * res.step_distance);
        double margin = 1e300;
        for (int i = 0; i < cfg.probe_count; ++i) {
            const auto probe = space.perturb((i % 2 == 0) ? res.point : phi, rng, scale);
            try {
                const double d = space.distance(phi, probe);
                const double f = d * d / (2.0 * cfg.tau) + space.functional(probe);
                margin = std::min(margin, f - res.objective);
            } catch (const Error&) {
                // probes outside the admissible cone carry no information
            }
        }
        res.probe_margin = margin;
    }
    return res;
}

// Discrete flow phi_{j+1} = W_tau(phi_j) on a uniform partition, with the
// per-step diagnostics the property harness consumes.
template <class PointT>
struct DiscreteFlowTrace {
    double tau = 0.0;
    std::vector<double> times;        // j tau, size m+1
    std::vector<PointT> iterates;     // size m+1
    std::vector<double> functional;   // nu(phi_j), size m+1
    std::vector<double> charge;       // I(phi_j), size m+1
    std::vector<double> step_dist;    // d(phi_j, phi_{j+1}), size m
    std::vector<double> objective;    // mu at each step, size m
    std::vector<double> el_residual;  // size m
    std::vector<char> certified;      // size m
    bool all_certified = true;

    int steps() const { return static_cast<int>(step_dist.size()); }
};

template <ProximalSpace S>
DiscreteFlowTrace<typename S::Point> discrete_flow(const S& space, const typename S::Point& phi0,
                                                   double tau, int m,
                                                   const ResolventConfig& base_cfg = {}) {
    if (!(tau > 0.0) || m < 1) throw ConfigError("discrete_flow: need tau > 0 and m >= 1");
    auto cfg = base_cfg.with_tau(tau);
    DiscreteFlowTrace<typename S::Point> trace;
    trace.tau = tau;
    trace.iterates.push_back(phi0);
    trace.times.push_back(0.0);
    trace.functional.push_back(space.functional(phi0));
    trace.charge.push_back(space.linear_charge(phi0));
    for (int j = 0; j < m; ++j) {
        auto step = resolvent(space, trace.iterates.back(), cfg);
        trace.times.push_back((j + 1) * tau);
        trace.functional.push_back(space.functional(step.point));
        trace.charge.push_back(space.linear_charge(step.point));
        trace.step_dist.push_back(step.step_distance);
        trace.objective.push_back(step.objective);
        trace.el_residual.push_back(step.el_residual);
        trace.certified.push_back(step.certified ? 1 : 0);
        trace.all_certified = trace.all_certified && step.certified;
        trace.iterates.push_back(std::move(step.point));
    }
    return trace;
}

// Structural checks on a trace: functional monotonicity, conservation of
// the linear charge, and the distance-control bound
// d^2(phi_0, phi_j) <= 2 j tau (nu_0 - nu_j).
struct TraceCheck {
    double worst_nu_increase = 0.0;
    double charge_drift = 0.0;
    double distance_control_margin = 1e300;  // min over j of bound - d^2
    bool pass(double tol_ineq, double charge_tol = 1e-9) const {
        return worst_nu_increase <= tol_ineq && charge_drift <= charge_tol &&
               distance_control_margin >= -tol_ineq;
    }
};

template <ProximalSpace S>
TraceCheck validate_trace(const S& space, const DiscreteFlowTrace<typename S::Point>& trace) {
    TraceCheck check;
    for (std::size_t j = 1; j < trace.functional.size(); ++j)
        check.worst_nu_increase =
            std::max(check.worst_nu_increase, trace.functional[j] - trace.functional[j - 1]);
    for (std::size_t j = 0; j < trace.charge.size(); ++j)
        check.charge_drift = std::max(check.charge_drift,
                                      std::abs(trace.charge[j] - trace.charge[0]));
    for (int j = 1; j <= trace.steps(); ++j) {
        const double d = space.distance(trace.iterates[0], trace.iterates[j]);
        const double bound =
            2.0 * j * trace.tau * (trace.functional[0] - trace.functional[j]);
        check.distance_control_margin = std::min(check.distance_control_margin, bound - d * d);
    }
    return check;
}

// Mayer iterates W_{t/n}^n(phi0) along a schedule of n values.
template <class PointT>
struct MayerEntry {
    int n = 0;
    PointT point;
    double functional = 0.0;
    double distance_to_previous = 0.0;  // d(result_{n_prev}, result_n)
};

template <ProximalSpace S>
std::vector<MayerEntry<typename S::Point>> mayer_limit(const S& space,
                                                       const typename S::Point& phi0, double t,
                                                       const std::vector<int>& schedule,
                                                       const ResolventConfig& base_cfg = {}) {
    if (!(t > 0.0)) throw ConfigError("mayer_limit: t must be positive");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1])
            throw ConfigError("mayer_limit: schedule must be increasing");
    std::vector<MayerEntry<typename S::Point>> out;
    for (int n : schedule) {
        auto cfg = base_cfg.with_tau(t / n);
        typename S::Point cur = phi0;
        for (int j = 0; j < n; ++j) cur = resolvent(space, cur, cfg).point;
        MayerEntry<typename S::Point> e;
        e.n = n;
        e.functional = space.functional(cur);
        e.distance_to_previous = out.empty() ? 0.0 : space.distance(out.back().point, cur);
        e.point = std::move(cur);
        out.push_back(std::move(e));
    }
    return out;
}

// Least-squares slope of log(y) against log(x); the empirical order of a
// convergence table.
inline double fitted_order(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct PropertyEntry {
    std::string name;
    double value = 0.0;
    double bound = 0.0;  // pass iff value <= bound
    bool pass = false;
};

// Evaluated residuals of the flow-map properties: contraction, Hoelder
// continuity in time, the semigroup law, dissipation and distance control.
struct PropertyReport {
    double npc = 0.0;
    double contraction = 0.0;
    double hoelder_exponent = 0.0;
    double hoelder_constant = 0.0;
    double semigroup_defect = 0.0;
    double semigroup_bound = 0.0;
    double dissipation_gap = 0.0;
    double slope_estimate = 0.0;
    double distance_control_margin = 0.0;
    double tol = 1e-6;

    std::vector<PropertyEntry> entries() const {
        std::vector<PropertyEntry> e;
        e.push_back({"npc-triangle", npc, tol, npc <= tol});
        e.push_back({"contraction", contraction, tol, contraction <= tol});
        e.push_back({"hoelder-exponent", hoelder_exponent, 0.45,
                     hoelder_exponent >= 0.45});  // lower bound
        e.push_back({"semigroup", semigroup_defect, semigroup_bound,
                     semigroup_defect <= semigroup_bound});
        e.push_back({"dissipation-gap", dissipation_gap, 0.1, dissipation_gap <= 0.1});
        e.push_back({"distance-control", -distance_control_margin, tol,
                     distance_control_margin >= -tol});
        return e;
    }

    bool all_pass() const {
        for (const auto& e : entries())
            if (!e.pass) return false;
        return true;
    }
};

template <ProximalSpace S>
PropertyReport flow_properties(const S& space, const typename S::Point& phi0,
                               const typename S::Point& psi0, const std::vector<double>& t_grid,
                               const ResolventConfig& base_cfg, double tol_ineq = 1e-6) {
    if (t_grid.empty()) throw ConfigError("flow_properties: empty time grid");
    const double t_max = t_grid.back();
    const double tau = base_cfg.tau;
    const int m = std::max(1, static_cast<int>(std::llround(t_max / tau)));

    const auto trace_a = discrete_flow(space, phi0, tau, m, base_cfg);
    const auto trace_b = discrete_flow(space, psi0, tau, m, base_cfg);

    PropertyReport rep;
    rep.tol = tol_ineq;

    // contraction along the grid
    const double d0 = space.distance(phi0, psi0);
    double worst_contraction = -1e300;
    for (double t : t_grid) {
        const int j = std::min<int>(m, std::max<int>(0, static_cast<int>(std::llround(t / tau))));
        worst_contraction =
            std::max(worst_contraction,
                     space.distance(trace_a.iterates[j], trace_b.iterates[j]) - d0);
    }
    rep.contraction = worst_contraction;

    // Hoelder fit of d(F_s, F_t) against |t - s| over grid pairs
    {
        std::vector<double> gaps, dists;
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            for (std::size_t j = i + 1; j < t_grid.size(); ++j) {
                const int ji = static_cast<int>(std::llround(t_grid[i] / tau));
                const int jj = static_cast<int>(std::llround(t_grid[j] / tau));
                if (ji == jj || jj > m) continue;
                const double d = space.distance(trace_a.iterates[ji], trace_a.iterates[jj]);
                if (d <= 0.0) continue;
                gaps.push_back((jj - ji) * tau);
                dists.push_back(d);
            }
        }
        rep.hoelder_exponent = fitted_order(gaps, dists);
        double c = 0.0;
        for (std::size_t i = 0; i < gaps.size(); ++i)
            c = std::max(c, dists[i] / std::sqrt(gaps[i]));
        rep.hoelder_constant = c;
    }

    // semigroup defect via Mayer iterates (a fixed uniform step is exactly
    // associative, so the check compares the two discretizations)
    {
        const int n_semi = 16;
        const double s_half = 0.5 * t_max;
        auto lhs = phi0;
        {
            auto cfg = base_cfg.with_tau(t_max / n_semi);
            for (int j = 0; j < n_semi; ++j) lhs = resolvent(space, lhs, cfg).point;
        }
        auto rhs = phi0;
        {
            auto cfg = base_cfg.with_tau(s_half / n_semi);
            for (int j = 0; j < n_semi; ++j) rhs = resolvent(space, rhs, cfg).point;
            for (int j = 0; j < n_semi; ++j) rhs = resolvent(space, rhs, cfg).point;
        }
        rep.semigroup_defect = space.distance(lhs, rhs);
        rep.semigroup_bound = rep.hoelder_constant * (std::sqrt(t_max * (t_max / n_semi)) +
                                                      2.0 * std::sqrt(s_half * (s_half / n_semi))) +
                              tol_ineq;
    }

    // dissipation: |d nu/dt + slope^2| relative to slope^2, slope from the
    // step decrements
    {
        double worst = 0.0, slope_last = 0.0;
        for (int j = 0; j < trace_a.steps(); ++j) {
            const double dnu = trace_a.functional[j] - trace_a.functional[j + 1];
            const double d = trace_a.step_dist[j];
            if (d <= 0.0) continue;
            const double slope = dnu / d;
            const double gap = std::abs(-dnu / tau + slope * slope) /
                               std::max(slope * slope, 1e-12);
            worst = std::max(worst, gap);
            slope_last = slope;
        }
        rep.dissipation_gap = worst;
        rep.slope_estimate = slope_last;
    }

    rep.distance_control_margin = validate_trace(space, trace_a).distance_control_margin;

    // NPC residuals over triangles sampled from the two trajectories
    {
        double worst = -1e300;
        const int stride = std::max(1, m / 4);
        for (int j = 0; j + stride <= m; j += stride) {
            worst = std::max(worst, check_npc_triangle(space, trace_a.iterates[j],
                                                       trace_b.iterates[j],
                                                       trace_a.iterates[j + stride], 5));
        }
        rep.npc = worst;
    }
    return rep;
}

// Boundedness diagnostics along a trace on a negative-curvature-weight
// background: the quantities the a priori theory keeps under control.
struct EnergyBoundReport {
    double sup_abs_j = 0.0;
    double sup_ia = 0.0;
    double sup_ja = 0.0;
    double sup_abs_entropy = 0.0;
    double sup_h1 = 0.0;
    bool bounded_10x = true;  // nothing grew past 10x its initial value
};

inline EnergyBoundReport energy_bound_diagnostics(const SurfaceBackground& bg,
                                                  const DiscreteFlowTrace<Potential>& trace) {
    if (integrate(bg.ricci) >= 0.0)
        throw ConfigError("energy_bound_diagnostics: requires ricci_density with negative mean");
    EnergyBoundReport rep;
    double j0 = 0, ia0 = 0, ja0 = 0, ent0 = 0, h10 = 0;
    bool first = true;
    for (const auto& p : trace.iterates) {
        const double j = std::abs(functional_j(bg, p));
        const double ia = functional_ia(bg, p);
        const double ja = functional_ja(bg, p);
        const double ent = std::abs(entropy_term(bg, p));
        const auto px = spectral_derivative(p.values, 1);
        const double h1 = integrate_product(px, px);
        if (first) {
            j0 = j;
            ia0 = ia;
            ja0 = ja;
            ent0 = ent;
            h10 = h1;
            first = false;
        }
        rep.sup_abs_j = std::max(rep.sup_abs_j, j);
        rep.sup_ia = std::max(rep.sup_ia, ia);
        rep.sup_ja = std::max(rep.sup_ja, ja);
        rep.sup_abs_entropy = std::max(rep.sup_abs_entropy, ent);
        rep.sup_h1 = std::max(rep.sup_h1, h1);
    }
    const double floor = 1e-12;
    rep.bounded_10x = rep.sup_abs_j <= 10.0 * std::max(j0, floor) + floor &&
                      rep.sup_ia <= 10.0 * std::max(ia0, floor) + floor &&
                      rep.sup_ja <= 10.0 * std::max(ja0, floor) + floor &&
                      rep.sup_abs_entropy <= 10.0 * std::max(ent0, floor) + floor &&
                      rep.sup_h1 <= 10.0 * std::max(h10, floor) + floor;
    return rep;
}

}  // namespace mmflow
