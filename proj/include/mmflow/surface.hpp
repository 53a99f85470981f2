#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmflow/grid.hpp"
#include "mmflow/rng.hpp"

namespace mmflow {

// Admissible-cone floor: omega + phi_xx must stay above this everywhere.
// Operations reject rather than clamp; silent clamping would corrupt the
// convexity tests.
inline constexpr double kPositivityFloor = 1e-6;

// Background geometry of the reduced model: a volume density omega > 0 and
// a curvature density rho on the unit circle. rho == const -r models the
// negative-first-Chern-class case, +r the positive one.
struct SurfaceBackground {
    int n = 0;
    std::vector<double> omega;
    std::vector<double> ricci;
    double volume = 0.0;
    double mean_scalar = 0.0;  // (1/V) ∫ rho dx, invariant across potentials
    bool metrically_flat = false;
    double omega0 = 0.0;  // the constant density when metrically flat
    std::string id;

    static SurfaceBackground flat(int n, double w0 = 1.0) {
        SurfaceBackground bg;
        bg.init(n, std::vector<double>(n, w0), std::vector<double>(n, 0.0), "flat");
        return bg;
    }

    static SurfaceBackground constant_ricci(int n, double r, double w0 = 1.0) {
        SurfaceBackground bg;
        bg.init(n, std::vector<double>(n, w0), std::vector<double>(n, r),
                r < 0 ? "ricci" + format_tag(r) : "ricci+" + format_tag(r));
        return bg;
    }

    static SurfaceBackground custom(int n, std::vector<double> omega_density,
                                    std::vector<double> ricci_density,
                                    std::string name = "custom") {
        SurfaceBackground bg;
        bg.init(n, std::move(omega_density), std::move(ricci_density), std::move(name));
        return bg;
    }

  private:
    static std::string format_tag(double r) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", r);
        return buf;
    }

    void init(int grid_n, std::vector<double> w, std::vector<double> rho, std::string name) {
        if (!is_power_of_two(grid_n)) throw ConfigError("SurfaceBackground: N must be a power of two");
        if (static_cast<int>(w.size()) != grid_n || static_cast<int>(rho.size()) != grid_n)
            throw ConfigError("SurfaceBackground: density grids must have length N");
        for (int k = 0; k < grid_n; ++k)
            if (!(w[k] > 0.0))
                throw PositivityError("SurfaceBackground: omega density must be positive", k, w[k]);
        n = grid_n;
        omega = std::move(w);
        ricci = std::move(rho);
        volume = integrate(omega);
        mean_scalar = integrate(ricci) / volume;
        const auto [lo, hi] = std::minmax_element(omega.begin(), omega.end());
        metrically_flat = (*hi - *lo) <= 1e-14 * std::max(1.0, *hi);
        omega0 = metrically_flat ? integrate(omega) : 0.0;
        id = std::move(name);
    }
};

// A point of the reduced space H: a grid-sampled potential.
struct Potential {
    std::vector<double> values;
    long id = -1;

    Potential() = default;
    explicit Potential(std::vector<double> v, long tag = -1) : values(std::move(v)), id(tag) {}
    static Potential zero(int n) { return Potential(std::vector<double>(n, 0.0)); }

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int k) { return values[k]; }
    double operator[](int k) const { return values[k]; }
};

inline Potential constant_potential(int n, double c) {
    return Potential(std::vector<double>(n, c));
}

// phi = sum over the given cosine mode amplitudes: amps[k-1] * cos(2 pi k x).
inline Potential cosine_potential(int n, const std::vector<double>& amps) {
    Potential p = Potential::zero(n);
    for (int j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / n;
        double v = 0.0;
        for (std::size_t k = 0; k < amps.size(); ++k) v += amps[k] * std::cos(kTwoPi * (k + 1) * x);
        p.values[j] = v;
    }
    return p;
}

// Deformed volume density omega + phi_xx.
inline std::vector<double> deformed_density(const SurfaceBackground& bg, const Potential& phi) {
    auto phixx = spectral_derivative(phi.values, 2);
    for (int k = 0; k < bg.n; ++k) phixx[k] += bg.omega[k];
    return phixx;
}

inline void require_positivity(const SurfaceBackground& bg, const Potential& phi,
                               const char* where) {
    const auto dens = deformed_density(bg, phi);
    int worst = 0;
    for (int k = 1; k < bg.n; ++k)
        if (dens[k] < dens[worst]) worst = k;
    if (dens[worst] <= kPositivityFloor)
        throw PositivityError(std::string(where) + ": potential leaves the admissible cone at x=" +
                                  std::to_string(static_cast<double>(worst) / bg.n) +
                                  " (density " + std::to_string(dens[worst]) + ")",
                              worst, dens[worst]);
}

inline void require_band_limited(const Potential& phi, const char* where) {
    if (!band_limited(phi.values))
        throw Error(std::string(where) + ": potential is not band-limited (top-third spectrum)");
}

// omega_phi / omega pointwise.
inline std::vector<double> volume_ratio(const SurfaceBackground& bg, const Potential& phi) {
    require_positivity(bg, phi, "volume_ratio");
    auto r = deformed_density(bg, phi);
    for (int k = 0; k < bg.n; ++k) r[k] /= bg.omega[k];
    return r;
}

// Scalar curvature of omega_phi: (rho - (log ratio)_xx) / (omega + phi_xx).
// The total ∫ s_phi omega_phi = ∫ rho dx is potential-independent because
// the log term integrates away on the circle.
inline std::vector<double> scalar_curvature(const SurfaceBackground& bg, const Potential& phi) {
    const auto ratio = volume_ratio(bg, phi);
    std::vector<double> logr(bg.n);
    for (int k = 0; k < bg.n; ++k) logr[k] = std::log(ratio[k]);
    const auto logr_xx = spectral_derivative(logr, 2);
    std::vector<double> s(bg.n);
    for (int k = 0; k < bg.n; ++k) s[k] = (bg.ricci[k] - logr_xx[k]) / (ratio[k] * bg.omega[k]);
    return s;
}

// I(phi) = ∫ phi omega + 1/2 ∫ phi phi_xx dx; the primitive of the mean
// one-form, with I(const c) = c V.
inline double functional_i(const SurfaceBackground& bg, const Potential& phi) {
    const auto phixx = spectral_derivative(phi.values, 2);
    return integrate_product(phi.values, bg.omega) + 0.5 * integrate_product(phi.values, phixx);
}

inline double functional_j(const SurfaceBackground& bg, const Potential& phi) {
    return -integrate_product(phi.values, bg.ricci);
}

// I^A = -(1/V) ∫ phi phi_xx dx, evaluated in the "pairing" form.
inline double functional_ia(const SurfaceBackground& bg, const Potential& phi) {
    const auto phixx = spectral_derivative(phi.values, 2);
    return -integrate_product(phi.values, phixx) / bg.volume;
}

// J^A = (1/(2V)) ∫ phi_x^2 dx, the Dirichlet form route.
inline double functional_ja(const SurfaceBackground& bg, const Potential& phi) {
    const auto phix = spectral_derivative(phi.values, 1);
    return 0.5 * integrate_product(phix, phix) / bg.volume;
}

inline double entropy_term(const SurfaceBackground& bg, const Potential& phi) {
    const auto ratio = volume_ratio(bg, phi);
    std::vector<double> f(bg.n);
    for (int k = 0; k < bg.n; ++k) f[k] = std::log(ratio[k]) * ratio[k] * bg.omega[k];
    return integrate(f);
}

// K-energy in explicit form: entropy + J + s_bar I.
inline double k_energy(const SurfaceBackground& bg, const Potential& phi) {
    return entropy_term(bg, phi) + functional_j(bg, phi) + bg.mean_scalar * functional_i(bg, phi);
}

// ∫ (s_phi - s_bar)^2 omega_phi: squared gradient norm of the K-energy.
inline double calabi_energy(const SurfaceBackground& bg, const Potential& phi) {
    const auto s = scalar_curvature(bg, phi);
    const auto dens = deformed_density(bg, phi);
    std::vector<double> f(bg.n);
    for (int k = 0; k < bg.n; ++k) {
        const double d = s[k] - bg.mean_scalar;
        f[k] = d * d * dens[k];
    }
    return integrate(f);
}

struct FunctionalReport {
    double i = 0.0;
    double j = 0.0;
    double i_a = 0.0;
    double j_a = 0.0;
    double nu = 0.0;
    double calabi = 0.0;
    double log_volume_integral = 0.0;
    bool mean_normalized = false;
};

inline FunctionalReport evaluate_functionals(const SurfaceBackground& bg, const Potential& phi) {
    require_positivity(bg, phi, "evaluate_functionals");
    FunctionalReport r;
    r.i = functional_i(bg, phi);
    r.j = functional_j(bg, phi);
    r.i_a = functional_ia(bg, phi);
    r.j_a = functional_ja(bg, phi);
    r.log_volume_integral = entropy_term(bg, phi);
    r.nu = r.log_volume_integral + r.j + bg.mean_scalar * r.i;
    r.calabi = calabi_energy(bg, phi);
    r.mean_normalized = std::abs(r.i) <= 1e-10 * std::max(1.0, sup_norm(phi.values));
    return r;
}

// Shift by the constant that zeroes I; idempotent.
inline Potential mean_normalize(const SurfaceBackground& bg, const Potential& phi) {
    Potential out = phi;
    const double c = -functional_i(bg, phi) / bg.volume;
    for (auto& v : out.values) v += c;
    return out;
}

// Random band-limited potential with sup amplitude <= amplitude and a wide
// positivity margin, for property sweeps.
inline Potential random_potential(const SurfaceBackground& bg, Rng& rng, double amplitude,
                                  int max_mode = 4, bool normalize = true) {
    const int n = bg.n;
    std::vector<double> v(n, 0.0);
    double sup_phi = 0.0, sup_phixx = 0.0;
    std::vector<double> a(max_mode), b(max_mode);
    for (int k = 1; k <= max_mode; ++k) {
        a[k - 1] = rng.uniform(-1.0, 1.0) / (k * k);
        b[k - 1] = rng.uniform(-1.0, 1.0) / (k * k);
        sup_phi += std::abs(a[k - 1]) + std::abs(b[k - 1]);
        sup_phixx += kTwoPi * kTwoPi * k * k * (std::abs(a[k - 1]) + std::abs(b[k - 1]));
    }
    const double min_omega = *std::min_element(bg.omega.begin(), bg.omega.end());
    double scale = 1.0;
    if (sup_phi > 0.0) scale = std::min(amplitude / sup_phi, 0.4 * min_omega / sup_phixx);
    for (int j = 0; j < n; ++j) {
        const double x = static_cast<double>(j) / n;
        double s = 0.0;
        for (int k = 1; k <= max_mode; ++k)
            s += a[k - 1] * std::cos(kTwoPi * k * x) + b[k - 1] * std::sin(kTwoPi * k * x);
        v[j] = scale * s;
    }
    Potential p(std::move(v));
    return normalize ? mean_normalize(bg, p) : p;
}

}  // namespace mmflow
