#include <doctest.h>

#include <cmath>

#include "mmflow/surface.hpp"
#include "oracles.hpp"

using namespace mmflow;

namespace {
Potential cosine(int n, double a, int mode = 1) {
    std::vector<double> amps(mode, 0.0);
    amps[mode - 1] = a;
    return cosine_potential(n, amps);
}
}  // namespace

TEST_CASE("background construction and invariants") {
    const auto bg = SurfaceBackground::flat(128);
    CHECK(bg.volume == doctest::Approx(1.0));
    CHECK(bg.mean_scalar == doctest::Approx(0.0));
    CHECK(bg.metrically_flat);
    const auto neg = SurfaceBackground::constant_ricci(64, -0.5);
    CHECK(neg.mean_scalar == doctest::Approx(-0.5));
    // recomputing s_bar from the stored densities reproduces the stored value
    CHECK(std::abs(integrate(neg.ricci) / neg.volume - neg.mean_scalar) < 1e-12);
    CHECK_THROWS_AS(SurfaceBackground::flat(100), ConfigError);
    CHECK_THROWS_AS(SurfaceBackground::flat(64, -1.0), PositivityError);
}

TEST_CASE("volume ratio") {
    const auto bg = SurfaceBackground::flat(128);
    const auto zero = Potential::zero(128);
    for (double r : volume_ratio(bg, zero)) CHECK(r == doctest::Approx(1.0));

    // phi = a cos(2 pi x): ratio = 1 - a (2 pi)^2 cos(2 pi x)
    const double a = 0.01;
    const auto phi = cosine(128, a);
    const auto ratio = volume_ratio(bg, phi);
    for (int k = 0; k < 128; ++k) {
        const double x = static_cast<double>(k) / 128;
        CHECK(ratio[k] ==
              doctest::Approx(1.0 - a * kTwoPi * kTwoPi * std::cos(kTwoPi * x)).epsilon(1e-10));
    }

    // mean check: ∫ ratio omega dx = V for random band-limited phi
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_potential(bg, rng, 1e-2);
        CHECK(integrate_product(volume_ratio(bg, p), bg.omega) ==
              doctest::Approx(bg.volume).epsilon(1e-13));
    }

    // positivity rejection carries the worst point
    const auto too_big = cosine(128, 0.05);
    CHECK_THROWS_AS(volume_ratio(bg, too_big), PositivityError);
}

TEST_CASE("scalar curvature") {
    const auto bg = SurfaceBackground::flat(128);
    for (double s : scalar_curvature(bg, Potential::zero(128))) CHECK(std::abs(s) < 1e-14);

    // ∫ s_phi omega_phi = 0 on the flat background for any phi
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_potential(bg, rng, 1e-2);
        const auto s = scalar_curvature(bg, p);
        const auto dens = deformed_density(bg, p);
        CHECK(std::abs(integrate_product(s, dens)) < 1e-10);
    }

    // small-amplitude linearization s ~ -phi_xxxx = -a (2 pi)^4 cos(2 pi x)
    // (the sign that makes the flow phi_t = s - s_bar damp the mode), and
    // the spectral route agrees with a 4th-order FD oracle on log(ratio)
    const double a = 1e-5;
    const auto phi = cosine(128, a);
    const auto s = scalar_curvature(bg, phi);
    const double w4 = kTwoPi * kTwoPi * kTwoPi * kTwoPi;
    for (int k = 0; k < 128; ++k) {
        const double x = static_cast<double>(k) / 128;
        CHECK(std::abs(s[k] + a * w4 * std::cos(kTwoPi * x)) < 1e-3 * a * w4);
    }
    const auto ratio = volume_ratio(bg, phi);
    std::vector<double> logr(128);
    for (int k = 0; k < 128; ++k) logr[k] = std::log(ratio[k]);
    const auto fd = oracles::fd4_second_derivative(logr);
    const auto dens = deformed_density(bg, phi);
    for (int k = 0; k < 128; ++k) {
        const double s_fd = (bg.ricci[k] - fd[k]) / dens[k];
        CHECK(std::abs(s[k] - s_fd) < 1e-8);
    }
}

TEST_CASE("gauss-bonnet drift over random potentials on three backgrounds") {
    Rng rng(17);
    for (const auto& bg : {SurfaceBackground::flat(64), SurfaceBackground::constant_ricci(64, -0.5),
                           SurfaceBackground::constant_ricci(64, 0.5)}) {
        const double total0 = integrate(bg.ricci);
        for (int i = 0; i < 100; ++i) {
            const auto p = random_potential(bg, rng, 1e-2);
            const auto s = scalar_curvature(bg, p);
            const auto dens = deformed_density(bg, p);
            CHECK(std::abs(integrate_product(s, dens) - total0) < 1e-8);
        }
    }
}

TEST_CASE("functional values against the quadrature oracle") {
    const int n = 128;
    const auto bg = SurfaceBackground::flat(n);
    const double a = 0.01;
    const auto phi = cosine(n, a);
    const auto rep = evaluate_functionals(bg, phi);

    // I = ∫ phi + 1/2 ∫ phi phi_xx with phi = a cos(2 pi x): -pi^2 a^2
    const double i_oracle = oracles::simpson01([&](double x) {
        const double c = std::cos(kTwoPi * x);
        return a * c + 0.5 * a * c * (-a * kTwoPi * kTwoPi * c);
    });
    CHECK(rep.i == doctest::Approx(i_oracle).epsilon(1e-9));
    CHECK(rep.i == doctest::Approx(-std::numbers::pi * std::numbers::pi * a * a).epsilon(1e-10));
    CHECK(rep.i == doctest::Approx(-9.8696044010893586e-4).epsilon(1e-10));

    // I_A = (1/V) ∫ phi_x^2 = 2 pi^2 a^2; J_A = half of it; the n = 1
    // collapse of the I^A/J^A inequality is the equality I_A - J_A = J_A
    const double ia_oracle = oracles::simpson01([&](double x) {
        const double sx = -a * kTwoPi * std::sin(kTwoPi * x);
        return sx * sx;
    });
    CHECK(rep.i_a == doctest::Approx(ia_oracle).epsilon(1e-9));
    CHECK(rep.i_a == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi * a * a));
    CHECK(rep.j_a == doctest::Approx(std::numbers::pi * std::numbers::pi * a * a));
    CHECK(rep.i_a - rep.j_a == doctest::Approx(rep.j_a).epsilon(1e-10));

    // flat background: J = 0, nu = entropy >= 0
    CHECK(rep.j == 0.0);
    CHECK(rep.nu >= 0.0);
    CHECK(rep.nu == doctest::Approx(rep.log_volume_integral).epsilon(1e-12));
}

TEST_CASE("report identities hold on random data across backgrounds") {
    Rng rng(23);
    for (const auto& bg :
         {SurfaceBackground::flat(64), SurfaceBackground::constant_ricci(64, -0.5)}) {
        for (int i = 0; i < 50; ++i) {
            const auto p = random_potential(bg, rng, 1e-2);
            const auto rep = evaluate_functionals(bg, p);
            CHECK(std::abs(rep.i_a - 2.0 * rep.j_a) <= 1e-10 * std::max(1.0, std::abs(rep.i_a)));
            CHECK(std::abs(rep.nu - (rep.log_volume_integral + rep.j + bg.mean_scalar * rep.i)) <=
                  1e-10);
        }
    }
}

TEST_CASE("k-energy path integral definition matches the explicit form") {
    // nu(phi) = -∫_0^1 ∫ (s - s_bar) phi omega_{t phi} dx dt along the
    // straight path, by Gauss-Legendre in t
    const auto bg = SurfaceBackground::constant_ricci(64, -0.5);
    Rng rng(29);
    for (int i = 0; i < 5; ++i) {
        const auto phi = random_potential(bg, rng, 5e-3);
        const auto nu_path = oracles::gauss01([&](double t) {
            Potential scaled = phi;
            for (auto& v : scaled.values) v *= t;
            const auto s = scalar_curvature(bg, scaled);
            const auto dens = deformed_density(bg, scaled);
            std::vector<double> integrand(bg.n);
            for (int k = 0; k < bg.n; ++k)
                integrand[k] = -(s[k] - bg.mean_scalar) * phi[k] * dens[k];
            return integrate(integrand);
        });
        CHECK(nu_path == doctest::Approx(k_energy(bg, phi)).epsilon(1e-9));
    }
}

TEST_CASE("k-energy entropy is nonnegative on the flat background") {
    const auto bg = SurfaceBackground::flat(64);
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_potential(bg, rng, 1e-2);
        CHECK(k_energy(bg, p) >= -1e-15);
    }
    CHECK(k_energy(bg, Potential::zero(64)) == doctest::Approx(0.0));
}

TEST_CASE("k-energy gradient matches finite differences") {
    const auto bg = SurfaceBackground::constant_ricci(64, 0.5);
    Rng rng(37);
    const auto phi = random_potential(bg, rng, 5e-3);
    const auto dir = random_potential(bg, rng, 5e-3);
    const auto s = scalar_curvature(bg, phi);
    const auto dens = deformed_density(bg, phi);
    std::vector<double> integrand(bg.n);
    for (int k = 0; k < bg.n; ++k) integrand[k] = -(s[k] - bg.mean_scalar) * dir[k] * dens[k];
    const double analytic = integrate(integrand);
    const double h = 1e-5;
    const double fd = oracles::central_diff(
        [&](double eps) {
            Potential q = phi;
            for (int k = 0; k < bg.n; ++k) q.values[k] += eps * dir[k];
            return k_energy(bg, q);
        },
        0.0, h);
    CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(1.0, std::abs(analytic)));
}

TEST_CASE("calabi flow fixed point characterization") {
    const auto bg = SurfaceBackground::flat(64);
    const auto zero = Potential::zero(64);
    CHECK(calabi_energy(bg, zero) == doctest::Approx(0.0));
    const auto s = scalar_curvature(bg, zero);
    for (double v : s) CHECK(std::abs(v - bg.mean_scalar) < 1e-14);
    // away from the fixed point the calabi energy is positive
    const auto p = cosine(64, 1e-3);
    CHECK(calabi_energy(bg, p) > 0.0);
}

TEST_CASE("mean normalize") {
    const auto bg = SurfaceBackground::flat(64);
    Rng rng(41);
    const auto p = random_potential(bg, rng, 1e-2);  // already normalized by construction
    const auto q = mean_normalize(bg, p);
    for (int k = 0; k < 64; ++k) CHECK(q[k] == doctest::Approx(p[k]).epsilon(1e-12));

    // constants collapse to zero since I(kappa) = kappa V
    const auto c = constant_potential(64, 0.7);
    const auto cn = mean_normalize(bg, c);
    for (int k = 0; k < 64; ++k) CHECK(std::abs(cn[k]) < 1e-14);

    // idempotence
    const auto shifted = constant_potential(64, 0.3);
    const auto once = mean_normalize(bg, shifted);
    const auto twice = mean_normalize(bg, once);
    for (int k = 0; k < 64; ++k) CHECK(once[k] == doctest::Approx(twice[k]).epsilon(1e-14));
    CHECK(std::abs(functional_i(bg, once)) < 1e-13);
}
