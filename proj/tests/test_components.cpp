#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "isoembed/components.hpp"
#include "isoembed/expr.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/transform.hpp"

using namespace isoembed;

namespace {
const Rect kBox{-1.0, 1.0, -1.0, 1.0};

struct Pieces {
    CharacteristicSolution u;
    CharacteristicSolution v;
    ScalarField2 ghat;
    ParamMap2 forward;
};

Pieces constant_metric_pieces(double eps, Rect box) {
    auto ghat = ScalarField2::from_expression(Expression::parse("1"), box);
    auto u = solve_u_hat(InitialData1D::identity(box.x0 + box.y0, box.x1 + box.y1), box);
    auto v = solve_v_hat(ghat, InitialData1D::linear(eps, box.x0, box.x1));
    auto fwd = assemble(u, v);
    return {std::move(u), std::move(v), std::move(ghat), std::move(fwd)};
}

} // namespace

TEST_CASE("consistency residual") {
    SECTION("constant-metric solution tuple vanishes") {
        const double eps = 0.25;
        CHECK(consistency_residual(1.0, {1.0, 1.0}, {eps, -eps}) == 0.0);
    }
    SECTION("identity transformation is consistent without solving the PDEs") {
        CHECK(consistency_residual(3.7, {1.0, 0.0}, {0.0, 1.0}) == 0.0);
    }
    SECTION("random smooth fields are generically inconsistent") {
        // Seeded random polynomial field u = x + c xy, v = y + d x^2.
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> coef(0.2, 0.8);
        const double c = coef(rng), d = coef(rng);
        double worst = 0.0;
        for (double x : {-0.5, 0.0, 0.5})
            for (double y : {-0.5, 0.2, 0.6}) {
                const Vec2 up{1.0 + c * y, c * x};
                const Vec2 vp{2.0 * d * x, 1.0};
                worst = std::max(worst, std::abs(consistency_residual(1.0 + x * x, up, vp)));
            }
        CHECK(worst > 1e-3);
    }
}

TEST_CASE("augmented determinant") {
    SECTION("solution tuple gives zero") {
        const double eps = 0.25;
        CHECK_THAT(augmented_determinant(1.0, {1.0, 1.0}, {eps, -eps}),
                   Catch::Matchers::WithinAbs(0.0, 1e-15));
    }
    SECTION("repeated dependence gives zero") {
        // u = vhat, v = vhat.
        CHECK(augmented_determinant(2.5, {0.0, 1.0}, {0.0, 1.0}) == 0.0);
    }
    SECTION("random tuples match the factored form") {
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> val(-2.0, 2.0), gpos(0.2, 3.0);
        for (int k = 0; k < 500; ++k) {
            const double g = gpos(rng);
            const Vec2 up{val(rng), val(rng)};
            const Vec2 vp{val(rng), val(rng)};
            const double det = augmented_determinant(g, up, vp);
            const double jac = up.x * vp.y - up.y * vp.x;
            const double factored = consistency_residual(g, up, vp) * jac;
            REQUIRE_THAT(det, Catch::Matchers::WithinAbs(factored, 1e-9));
        }
    }
}

TEST_CASE("cramer recovery for the constant metric") {
    SECTION("eps = 1/2: R = 1/2, S = 2") {
        const double eps = 0.5;
        Pieces p = constant_metric_pieces(eps, kBox);
        const Rect w = working_subdomain(p.forward);
        const ComponentPair cp = cramer_RS(p.ghat, p.u, p.v, p.forward, w);
        for (const Vec2 uv : {Vec2{0.0, 0.0}, Vec2{0.5, 0.1}, Vec2{-0.3, -0.1}}) {
            const LevelPoint lp = cp.components.at(uv, {0.0, 0.0});
            REQUIRE_THAT(lp.R, Catch::Matchers::WithinAbs(0.5, 1e-12));
            REQUIRE_THAT(lp.S, Catch::Matchers::WithinAbs(2.0, 1e-12));
        }
        // The bicubic grids sample the same constants.
        CHECK_THAT(cp.R_interp(cp.uv_box.center()), Catch::Matchers::WithinAbs(0.5, 1e-12));
        CHECK_THAT(cp.S_interp(cp.uv_box.center()), Catch::Matchers::WithinAbs(2.0, 1e-12));
    }
    SECTION("eps = 1: R = S = 1/2") {
        Pieces p = constant_metric_pieces(1.0, kBox);
        const Rect w = working_subdomain(p.forward);
        const ComponentPair cp = cramer_RS(p.ghat, p.u, p.v, p.forward, w);
        const LevelPoint lp = cp.components.at({0.2, 0.3}, {0.0, 0.0});
        CHECK_THAT(lp.R, Catch::Matchers::WithinAbs(0.5, 1e-12));
        CHECK_THAT(lp.S, Catch::Matchers::WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("third component equation returns Ghat exactly for solution fields") {
    const double eps = 0.5;
    Pieces p = constant_metric_pieces(eps, kBox);
    LevelComponents comps(p.ghat, p.u, p.v, p.forward);
    for (const Vec2 q : {Vec2{0.1, 0.2}, Vec2{-0.4, 0.3}}) {
        const LevelPoint lp = comps.at_preimage(q);
        const double third = lp.R * lp.u_partials.y * lp.u_partials.y +
                             lp.S * lp.v_partials.y * lp.v_partials.y;
        REQUIRE_THAT(third, Catch::Matchers::WithinAbs(lp.ghat, 1e-15));
    }
}

TEST_CASE("consistency gate rejects mismatched coefficient fields") {
    // Solutions built for Ghat = 1 fed to the recovery with Ghat = 2:
    // the consistency residual becomes eps and the gate must fire.
    Pieces p = constant_metric_pieces(0.25, kBox);
    const Rect w = working_subdomain(p.forward);
    auto wrong_ghat = ScalarField2::from_expression(Expression::parse("2"), kBox);
    CHECK_THROWS_AS(cramer_RS(wrong_ghat, p.u, p.v, p.forward, w), consistency_error);
}

TEST_CASE("vanishing v_vhat is rejected") {
    // Data whose slope dies exactly at the queried foot point (0, 0); the
    // construction-time spot check cannot see an isolated zero.
    Pieces p = constant_metric_pieces(0.5, kBox);
    auto pin_hole = InitialData1D{[](double s) { return s; },
                                  [](double s) { return std::abs(s) < 0.0035 ? 0.0 : 1.0; },
                                  -1.0, 1.0};
    LevelComponents comps(p.ghat, p.u, p.v.with_data(pin_hole), p.forward);
    CHECK_THROWS_AS(comps.at_preimage({0.1, 0.1}), consistency_error);
}

TEST_CASE("pullback of R du^2 + S dv^2 through the forward map is the given metric") {
    for (const char* text : {"1", "1+0.1*uhat"}) {
        const Rect box{-1.0, 1.0, -0.5, 0.5};
        auto ghat = ScalarField2::from_expression(Expression::parse(text), box);
        auto u = solve_u_hat(InitialData1D::identity(-2, 2), box);
        auto v = solve_v_hat(ghat, InitialData1D::linear(0.25, -1, 1));
        auto fwd = assemble(u, v);
        const Rect w = working_subdomain(fwd);
        LevelComponents comps(ghat, u, v, fwd);

        Vec2 seed = w.center();
        for (int j = 0; j < 7; ++j)
            for (int i = 0; i < 7; ++i) {
                const Vec2 p{w.x0 + w.width() * (i + 0.5) / 7.0,
                             w.y0 + w.height() * (j + 0.5) / 7.0};
                auto rs_form = [&](Vec2 uv) {
                    const LevelPoint lp = comps.at(uv, seed);
                    seed = lp.uhat_point;
                    return FirstFundamentalForm{lp.R, 0.0, lp.S};
                };
                const FirstFundamentalForm f = pullback(rs_form, fwd, p);
                REQUIRE_THAT(f.E, Catch::Matchers::WithinAbs(1.0, 1e-6));
                REQUIRE_THAT(f.F, Catch::Matchers::WithinAbs(0.0, 1e-6));
                REQUIRE_THAT(f.G, Catch::Matchers::WithinAbs(ghat(p), 1e-6));
            }
    }
}
