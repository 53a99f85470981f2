#include <doctest.h>

#include <cmath>

#include "mmflow/euclidean.hpp"
#include "mmflow/kahler_space.hpp"
#include "mmflow/space_checks.hpp"

using namespace mmflow;

namespace {
EuclideanSpace line_space() { return EuclideanSpace(QuadraticFunctional::scalar(1.0)); }
}  // namespace

TEST_CASE("npc triangle: degenerate and euclidean equality cases") {
    const auto space = line_space();
    const auto p = [&](double x) { return space.make_point({x}); };

    // a = b = c: all distances vanish, residual 0
    CHECK(check_npc_triangle(space, p(1.0), p(1.0), p(1.0), 5) == doctest::Approx(0.0));

    // collinear euclidean points attain equality (flat space)
    CHECK(std::abs(check_npc_triangle(space, p(0.0), p(1.0), p(3.0), 9)) < 1e-12);

    CHECK_THROWS_AS(check_npc_triangle(space, p(0.0), p(1.0), p(2.0), 1), ConfigError);
}

TEST_CASE("quadrilateral comparison: degenerate and euclidean cases") {
    const auto space = line_space();
    const auto p = [&](double x) { return space.make_point({x}); };

    // x0 = x1, y0 = y1 reduces to 2 d^2 <= 2 d^2
    CHECK(std::abs(check_quadrilateral(space, p(0.0), p(0.0), p(2.0), p(2.0), 5)) < 1e-12);

    // euclidean segment endpoints 0,1,2,3
    CHECK(check_quadrilateral(space, p(0.0), p(1.0), p(2.0), p(3.0), 9) <= 1e-12);
}

TEST_CASE("b-convexity: quadratic on the line") {
    const auto space = line_space();
    const auto p = [&](double x) { return space.make_point({x}); };

    // p = q short-circuits to zero
    CHECK(check_b_convexity(space, p(2.0), p(2.0), 0.0, 5) == doctest::Approx(0.0));

    // single-sample value at t = 1/2 for f(x) = x^2/2 on [0,2]:
    // f(1) - (0 + 1/2 f(2)) = 0.5 - 1 = -0.5
    CHECK(b_convexity_residual_at(space, p(0.0), p(2.0), 0.0, 0.5) == doctest::Approx(-0.5));

    // the sampled max includes the endpoints where the residual vanishes
    CHECK(std::abs(check_b_convexity(space, p(0.0), p(2.0), 0.0, 9)) < 1e-12);

    CHECK_THROWS_AS(check_b_convexity(space, p(0.0), p(1.0), -1.0, 5), ConfigError);
}

TEST_CASE("euclidean space is NPC on random triangles") {
    Matrix a(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = 2.0;
    const EuclideanSpace space(QuadraticFunctional(std::move(a), {0.0, 0.0}));
    Rng rng(211);
    for (int i = 0; i < 200; ++i) {
        const auto x = space.random_point(rng, 2.0);
        const auto y = space.random_point(rng, 2.0);
        const auto z = space.random_point(rng, 2.0);
        CHECK(check_npc_triangle(space, x, y, z, 7) <= 1e-10);
    }
    const auto rep = validate_space_contract(
        space, [&](Rng& r) { return space.random_point(r, 2.0); }, rng, 1000, 3);
    CHECK(rep.worst() <= 1e-10);
}

TEST_CASE("kahler model: NPC, quadrilateral and convexity residuals") {
    const auto bg = SurfaceBackground::flat(64);
    const KahlerSpace space(bg);
    Rng rng(223);
    // small-amplitude sweep; the acceptance run covers the full counts
    for (int i = 0; i < 25; ++i) {
        const auto a = space.random_point(rng, 8e-3);
        const auto b = space.random_point(rng, 8e-3);
        const auto c = space.random_point(rng, 8e-3);
        CHECK(check_npc_triangle(space, a, b, c, 7) <= 1e-6);
    }
    for (int i = 0; i < 10; ++i) {
        const auto x0 = space.random_point(rng, 8e-3);
        const auto x1 = space.random_point(rng, 8e-3);
        const auto y0 = space.random_point(rng, 8e-3);
        const auto y1 = space.random_point(rng, 8e-3);
        CHECK(check_quadrilateral(space, x0, x1, y0, y1, 7) <= 1e-6);
    }
    for (int i = 0; i < 25; ++i) {
        const auto p = space.random_point(rng, 8e-3);
        const auto q = space.random_point(rng, 8e-3);
        CHECK(check_b_convexity(space, p, q, 0.0, 7) <= 1e-6);
    }
}

TEST_CASE("error context carries the offending sample") {
    // a potential outside the admissible cone makes the geodesic fail; the
    // checker augments the error with the sample parameter
    const auto bg = SurfaceBackground::flat(64);
    const KahlerSpace space(bg);
    const auto good = Potential::zero(64);
    const auto bad = cosine_potential(64, {0.05});
    try {
        check_npc_triangle(space, good, good, bad, 5);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("s=") != std::string::npos);
    }
}
