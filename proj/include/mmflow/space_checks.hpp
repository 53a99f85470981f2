#pragma once

#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <vector>

#include "mmflow/errors.hpp"
#include "mmflow/rng.hpp"

namespace mmflow {

template <class S>
concept MetricSpace = requires(const S& s, const typename S::Point& p, const typename S::Point& q,
                               double t) {
    { s.distance(p, q) } -> std::convertible_to<double>;
    { s.geodesic(p, q, t) } -> std::convertible_to<typename S::Point>;
    { s.functional(p) } -> std::convertible_to<double>;
};

namespace detail {
inline double uniform_sample(int i, int samples) {
    return static_cast<double>(i) / (samples - 1);
}
}  // namespace detail

// Residual of the hyperbolic (NPC) triangle comparison at parameter s:
//   d(a, gamma_bc(s))^2 - [(1-s) d(a,b)^2 + s d(a,c)^2 - s(1-s) d(b,c)^2].
// Nonpositive (up to slack) on an NPC space.
template <MetricSpace S>
double npc_residual_at(const S& space, const typename S::Point& a, const typename S::Point& b,
                       const typename S::Point& c, double s) {
    const double dab = space.distance(a, b);
    const double dac = space.distance(a, c);
    const double dbc = space.distance(b, c);
    if (dbc == 0.0) return 0.0;  // degenerate geodesic short-circuits
    const auto p = space.geodesic(b, c, s);
    const double dap = space.distance(a, p);
    return dap * dap - ((1.0 - s) * dab * dab + s * dac * dac - s * (1.0 - s) * dbc * dbc);
}

// Worst NPC residual over a uniform sample grid including the endpoints.
template <MetricSpace S>
double check_npc_triangle(const S& space, const typename S::Point& a, const typename S::Point& b,
                          const typename S::Point& c, int samples) {
    if (samples < 2) throw ConfigError("check_npc_triangle: samples must be >= 2");
    double worst = -1e300;
    for (int i = 0; i < samples; ++i) {
        const double s = detail::uniform_sample(i, samples);
        try {
            worst = std::max(worst, npc_residual_at(space, a, b, c, s));
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (while sampling NPC triangle at s=" +
                        std::to_string(s) + ")");
        }
    }
    return worst;
}

// Quadrilateral comparison residual at parameter t: LHS minus the NPC
// quadrilateral bound for the geodesics x0->x1 and y0->y1.
template <MetricSpace S>
double quadrilateral_residual_at(const S& space, const typename S::Point& x0,
                                 const typename S::Point& x1, const typename S::Point& y0,
                                 const typename S::Point& y1, double t) {
    const double dx = space.distance(x0, x1);
    const double dy = space.distance(y0, y1);
    const double d00 = space.distance(x0, y0);
    const double d11 = space.distance(x1, y1);
    const auto xt = (dx == 0.0) ? x0 : space.geodesic(x0, x1, t);
    const auto xmt = (dx == 0.0) ? x0 : space.geodesic(x0, x1, 1.0 - t);
    const double lhs_a = space.distance(xt, y0);
    const double lhs_b = space.distance(xmt, y1);
    const double rhs = d00 * d00 + d11 * d11 + 2.0 * t * t * dx * dx +
                       t * (dy * dy - dx * dx) - t * (dy - dx) * (dy - dx);
    return lhs_a * lhs_a + lhs_b * lhs_b - rhs;
}

template <MetricSpace S>
double check_quadrilateral(const S& space, const typename S::Point& x0,
                           const typename S::Point& x1, const typename S::Point& y0,
                           const typename S::Point& y1, int samples) {
    if (samples < 2) throw ConfigError("check_quadrilateral: samples must be >= 2");
    double worst = -1e300;
    for (int i = 0; i < samples; ++i) {
        const double t = detail::uniform_sample(i, samples);
        try {
            worst = std::max(worst, quadrilateral_residual_at(space, x0, x1, y0, y1, t));
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (while sampling quadrilateral at t=" +
                        std::to_string(t) + ")");
        }
    }
    return worst;
}

// B-convexity residual of the space's functional along the geodesic p->q:
//   f(gamma(t)) - [(1-t) f(p) + t f(q) + B t(1-t) d^2(p,q)].
template <MetricSpace S>
double b_convexity_residual_at(const S& space, const typename S::Point& p,
                               const typename S::Point& q, double b, double t) {
    const double d = space.distance(p, q);
    if (d == 0.0) return 0.0;
    const auto g = space.geodesic(p, q, t);
    return space.functional(g) -
           ((1.0 - t) * space.functional(p) + t * space.functional(q) + b * t * (1.0 - t) * d * d);
}

template <MetricSpace S>
double check_b_convexity(const S& space, const typename S::Point& p, const typename S::Point& q,
                         double b, int samples) {
    if (samples < 2) throw ConfigError("check_b_convexity: samples must be >= 2");
    if (b < 0.0) throw ConfigError("check_b_convexity: B must be >= 0");
    double worst = -1e300;
    for (int i = 0; i < samples; ++i) {
        const double t = detail::uniform_sample(i, samples);
        try {
            worst = std::max(worst, b_convexity_residual_at(space, p, q, b, t));
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " (while sampling convexity at t=" +
                        std::to_string(t) + ")");
        }
    }
    return worst;
}

// Metric-contract sweep: symmetry, zero diagonal, endpoint match and
// constant speed over random pairs. All residuals are relative to the
// pair distance.
struct ContractReport {
    double worst_symmetry = 0.0;
    double worst_diagonal = 0.0;
    double worst_endpoint = 0.0;
    double worst_constant_speed = 0.0;
    int pairs = 0;

    double worst() const {
        return std::max(std::max(worst_symmetry, worst_diagonal),
                        std::max(worst_endpoint, worst_constant_speed));
    }
};

template <MetricSpace S, class Gen>
ContractReport validate_space_contract(const S& space, Gen&& make_point, Rng& rng, int pairs,
                                       int speed_samples = 3) {
    ContractReport rep;
    rep.pairs = pairs;
    for (int i = 0; i < pairs; ++i) {
        const auto p = make_point(rng);
        const auto q = make_point(rng);
        const double dpq = space.distance(p, q);
        const double dqp = space.distance(q, p);
        const double scale = std::max(dpq, 1e-12);
        rep.worst_symmetry = std::max(rep.worst_symmetry, std::abs(dpq - dqp) / scale);
        rep.worst_diagonal = std::max(rep.worst_diagonal, space.distance(p, p));
        rep.worst_endpoint =
            std::max(rep.worst_endpoint, space.distance(space.geodesic(p, q, 0.0), p) / scale);
        rep.worst_endpoint =
            std::max(rep.worst_endpoint, space.distance(space.geodesic(p, q, 1.0), q) / scale);
        for (int j = 1; j <= speed_samples; ++j) {
            const double s = static_cast<double>(j) / (speed_samples + 1);
            const double ds = space.distance(p, space.geodesic(p, q, s));
            rep.worst_constant_speed =
                std::max(rep.worst_constant_speed, std::abs(ds - s * dpq) / scale);
        }
    }
    return rep;
}

}  // namespace mmflow
