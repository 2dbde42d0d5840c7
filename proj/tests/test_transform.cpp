#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "isoembed/characteristics.hpp"
#include "isoembed/expr.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/transform.hpp"

using namespace isoembed;

namespace {

const Rect kBox{-1.0, 1.0, -1.0, 1.0};

// The assembled geodesic-to-level map for Ghat = 1 with data (id, eps id):
// (uhat, vhat) -> (uhat + vhat, eps (uhat - vhat)).
ParamMap2 constant_metric_map(double eps, Rect box) {
    auto u = solve_u_hat(InitialData1D::identity(box.x0 + box.y0, box.x1 + box.y1), box);
    auto ghat = ScalarField2::from_expression(Expression::parse("1"), box);
    auto v = solve_v_hat(ghat, InitialData1D::linear(eps, box.x0, box.x1));
    return assemble(u, v);
}

} // namespace

TEST_CASE("assemble: constant-metric map has determinant -2 eps everywhere") {
    // "Everywhere" means the strip |uhat - vhat| <= 1 that the Cauchy data
    // on the initial segment determines.
    const double eps = 0.5;
    const ParamMap2 map = constant_metric_map(eps, kBox);
    for (const Vec2 p : {Vec2{0, 0}, Vec2{0.4, -0.3}, Vec2{-0.3, 0.6}, Vec2{0.9, 0.9}}) {
        REQUIRE_THAT(map.jacobian_det(p), Catch::Matchers::WithinAbs(-2 * eps, 1e-12));
        const Vec2 q = map(p);
        REQUIRE_THAT(q.x, Catch::Matchers::WithinAbs(p.x + p.y, 1e-12));
        REQUIRE_THAT(q.y, Catch::Matchers::WithinAbs(eps * (p.x - p.y), 1e-12));
    }
}

TEST_CASE("assemble: identity and diagonal maps") {
    const ParamMap2 id = identity_map(kBox);
    CHECK(id.jacobian_det({0.2, 0.5}) == 1.0);

    const Rect big{-3.0, 3.0, -3.0, 3.0};
    const ParamMap2 diag(
        ScalarField2::from_function([](double x, double) { return 2 * x; },
                                    [](double, double) { return 2.0; },
                                    [](double, double) { return 0.0; }, big),
        ScalarField2::from_function([](double, double y) { return 3 * y; },
                                    [](double, double) { return 0.0; },
                                    [](double, double) { return 3.0; }, big),
        big);
    CHECK(diag.jacobian_det({0.1, 0.9}) == 6.0);
    const Vec2 p = diag.invert({4.0, 6.0}, {0.0, 0.0});
    CHECK_THAT(p.x, Catch::Matchers::WithinAbs(2.0, 1e-11));
    CHECK_THAT(p.y, Catch::Matchers::WithinAbs(2.0, 1e-11));
}

TEST_CASE("plane map determinant on the initial line is -2 a'(x) b'(x)") {
    const InitialData1D a{[](double s) { return s * s * s + s; },
                          [](double s) { return 3 * s * s + 1; }, -4.0, 4.0};
    const InitialData1D b{[](double s) { return std::tanh(s); },
                          [](double s) { return 1.0 / std::pow(std::cosh(s), 2); }, -4.0, 4.0};
    const ParamMap2 map = plane_map(a, b, Rect{-2, 2, -2, 2});
    for (double x : {-1.5, -0.3, 0.0, 0.8, 1.9}) {
        const double expected = -2.0 * a.slope(x) * b.slope(x);
        REQUIRE_THAT(map.jacobian_det({x, 0.0}), Catch::Matchers::WithinAbs(expected, 1e-13));
    }
}

TEST_CASE("invert: worked cases") {
    SECTION("constant-metric map, eps = 1/2") {
        const ParamMap2 map = constant_metric_map(0.5, kBox);
        const Vec2 p = map.invert({1.0, 0.5}, {0.5, 0.5});
        CHECK_THAT(p.x, Catch::Matchers::WithinAbs(1.0, 1e-11));
        CHECK_THAT(p.y, Catch::Matchers::WithinAbs(0.0, 1e-11));
    }
    SECTION("identity") {
        const ParamMap2 id = identity_map(kBox);
        const Vec2 p = id.invert({0.3, -0.7}, {0.0, 0.0});
        CHECK_THAT(p.x, Catch::Matchers::WithinAbs(0.3, 1e-12));
        CHECK_THAT(p.y, Catch::Matchers::WithinAbs(-0.7, 1e-12));
    }
}

TEST_CASE("invert: round trip within 1e-9 on a curved map") {
    const Rect box{-1.0, 1.0, -0.5, 0.5};
    auto u = solve_u_hat(InitialData1D::identity(-2, 2), box);
    auto ghat = ScalarField2::from_expression(Expression::parse("1+0.1*uhat"), box);
    auto v = solve_v_hat(ghat, InitialData1D::linear(0.25, -1, 1));
    const ParamMap2 map = assemble(u, v);

    std::mt19937 rng(99);
    std::uniform_real_distribution<double> cu(-0.5, 0.5), cv(-0.3, 0.3), noise(-0.05, 0.05);
    for (int k = 0; k < 500; ++k) {
        const Vec2 p{cu(rng), cv(rng)};
        const Vec2 q = map(p);
        const Vec2 seed{p.x + noise(rng), p.y + noise(rng)};
        const Vec2 back = map.invert(q, seed);
        REQUIRE_THAT(back.x, Catch::Matchers::WithinAbs(p.x, 1e-9));
        REQUIRE_THAT(back.y, Catch::Matchers::WithinAbs(p.y, 1e-9));
    }
}

TEST_CASE("invert reports failure with the last iterate") {
    const ParamMap2 map = constant_metric_map(0.5, kBox);
    // Forward image of the box has |u| <= 2; this target is unreachable.
    try {
        map.invert({50.0, 0.0}, {0.0, 0.0});
        FAIL("expected inversion_error");
    } catch (const inversion_error& e) {
        CHECK(e.residual() > 0.0);
    } catch (const characteristic_exit_error&) {
        SUCCEED();  // rejected by domain exit before Newton could stall
    }
}

TEST_CASE("invert_plane: specialized inverse of the plane map") {
    SECTION("identity data") {
        const Vec2 xy = invert_plane(InitialData1D::identity(-4, 4),
                                     InitialData1D::identity(-4, 4), {3.0, 1.0});
        CHECK_THAT(xy.x, Catch::Matchers::WithinAbs(2.0, 1e-12));
        CHECK_THAT(xy.y, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
    SECTION("constant-metric solution data, eps = 1/2") {
        // b(s) = (eps^-2 - 2)^{-1/2} s = s/sqrt(2); the inverse must match
        // x = (u + sqrt(2) v)/2, y = (u - sqrt(2) v)/2.
        const double beta = 1.0 / std::sqrt(2.0);
        const InitialData1D a = InitialData1D::identity(-4, 4);
        const InitialData1D b = InitialData1D::linear(beta, -4, 4);
        for (const Vec2 q : {Vec2{1.0, 0.5}, Vec2{0.0, 0.0}, Vec2{-0.4, 0.9}}) {
            const Vec2 xy = invert_plane(a, b, q);
            REQUIRE_THAT(xy.x,
                         Catch::Matchers::WithinAbs(0.5 * (q.x + std::sqrt(2.0) * q.y), 1e-11));
            REQUIRE_THAT(xy.y,
                         Catch::Matchers::WithinAbs(0.5 * (q.x - std::sqrt(2.0) * q.y), 1e-11));
        }
    }
    SECTION("stretched first datum") {
        const Vec2 xy = invert_plane(InitialData1D::linear(2.0, -4, 4),
                                     InitialData1D::identity(-4, 4), {4.0, 1.0});
        CHECK_THAT(xy.x, Catch::Matchers::WithinAbs(1.5, 1e-12));
        CHECK_THAT(xy.y, Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
    SECTION("out of monotone range") {
        CHECK_THROWS_AS(invert_plane(InitialData1D::identity(0, 1),
                                     InitialData1D::identity(0, 1), {5.0, 0.5}),
                        domain_error);
    }
}

TEST_CASE("invert_plane agrees with generic Newton inversion of the plane map") {
    const InitialData1D a{[](double s) { return s + 0.1 * s * s * s; },
                          [](double s) { return 1 + 0.3 * s * s; }, -3.0, 3.0};
    const InitialData1D b{[](double s) { return 2.0 * std::tanh(s); },
                          [](double s) { return 2.0 / std::pow(std::cosh(s), 2); }, -3.0, 3.0};
    const ParamMap2 map = plane_map(a, b, Rect{-1, 1, -1, 1});

    std::mt19937 rng(31);
    std::uniform_real_distribution<double> coord(-0.8, 0.8);
    for (int k = 0; k < 500; ++k) {
        const Vec2 xy{coord(rng), coord(rng)};
        const Vec2 q = map(xy);
        const Vec2 special = invert_plane(a, b, q);
        const Vec2 generic = map.invert(q, {0.0, 0.0});
        REQUIRE_THAT(special.x, Catch::Matchers::WithinAbs(generic.x, 1e-9));
        REQUIRE_THAT(special.y, Catch::Matchers::WithinAbs(generic.y, 1e-9));
    }
}

TEST_CASE("assembled map determinant on the line matches h'(-v_uhat)(G+1)") {
    const Rect box{-1.0, 1.0, -0.5, 0.5};
    const double delta = 0.25;
    auto u = solve_u_hat(InitialData1D::identity(-2, 2), box);
    auto ghat = ScalarField2::from_expression(Expression::parse("exp(2*uhat)"), box);
    auto v = solve_v_hat(ghat, InitialData1D::linear(delta, -1, 1));
    const ParamMap2 map = assemble(u, v);

    for (double uhat : {-0.8, -0.2, 0.0, 0.4, 0.9}) {
        // Independent ingredients: h' = 1, v_uhat(uhat, 0) = delta (exact
        // variational trace), G from the expression.
        const double v_u = v.partials_exact({uhat, 0.0}, true).x;
        const double expected = 1.0 * (-v_u) * (ghat(uhat, 0.0) + 1.0);
        REQUIRE_THAT(map.jacobian_det({uhat, 0.0}), Catch::Matchers::WithinAbs(expected, 1e-6));
        REQUIRE_THAT(v_u, Catch::Matchers::WithinAbs(delta, 1e-12));
    }
}

TEST_CASE("working subdomain: constant metric fills the determinacy strip") {
    // The data reaches the strip |uhat - vhat| <= 1; the largest inscribed
    // axis-aligned rectangle containing the line has area 1.
    const ParamMap2 map = constant_metric_map(0.5, kBox);
    const Rect w = working_subdomain(map);
    CHECK(w.width() * w.height() >= 0.9);
    CHECK(w.y0 < 0.0);
    CHECK(w.y1 > 0.0);
    CHECK(w.x0 <= 0.0);
    CHECK(w.x1 >= 0.0);
    CHECK(w.x1 - w.y0 <= 1.0 + 1e-12);
    CHECK(w.x0 - w.y1 >= -1.0 - 1e-12);
}

TEST_CASE("working subdomain straddles the initial line for curved metrics") {
    const Rect box{-1.0, 1.0, -1.0, 1.0};
    auto u = solve_u_hat(InitialData1D::identity(-2, 2), box);
    auto ghat = ScalarField2::from_expression(Expression::parse("exp(2*uhat)"), box);
    auto v = solve_v_hat(ghat, InitialData1D::linear(0.25, -1, 1));
    const Rect w = working_subdomain(assemble(u, v));
    CHECK(w.y0 < 0.0);
    CHECK(w.y1 > 0.0);
    CHECK(w.width() > 0.5);
    CHECK(w.x0 <= 0.0);
    CHECK(w.x1 >= 0.0);
}
