// Acceptance suite: every criterion runs at its stated tolerance and
// prints one pass/fail line.  Run the binary without filters for the full
// suite, or with tags [c1]..[c9] for a single criterion.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "isoembed/pipeline.hpp"

using namespace isoembed;

namespace {

struct Criterion {
    int id;
    std::string label;
    bool ok = true;
    std::ostringstream notes;

    Criterion(int id_, std::string label_) : id(id_), label(std::move(label_)) {}

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            notes << "  FAILED: " << what << "\n";
        }
    }
    void expect_le(double value, double bound, const std::string& what) {
        expect(std::isfinite(value) && value <= bound,
               what + " = " + format_double(value) + " (bound " + format_double(bound) + ")");
    }
    void note(const std::string& text) { notes << "  " << text << "\n"; }

    void finish() {
        std::cout << "[acceptance] criterion " << id << " (" << label << "): "
                  << (ok ? "PASS" : "FAIL") << "\n"
                  << notes.str();
        std::cout.flush();
        REQUIRE(ok);
    }
};

InitialData1D random_monotone(std::mt19937& rng, double smax) {
    std::uniform_int_distribution<int> kind(0, 1);
    if (kind(rng) == 0) {
        // positive-coefficient cubic
        std::uniform_real_distribution<double> c1d(0.5, 2.0), cd(0.0, 0.5);
        const double c1 = c1d(rng), c2 = cd(rng), c3 = cd(rng);
        return {[=](double s) { return c1 * s + c2 * s * s + c3 * s * s * s; },
                [=](double s) { return c1 + 2 * c2 * s + 3 * c3 * s * s; }, 0.0, smax};
    }
    // scaled tanh
    std::uniform_real_distribution<double> ad(0.5, 2.0), bd(0.3, 1.2);
    const double alpha = ad(rng), beta = bd(rng);
    return {[=](double s) { return alpha * std::tanh(beta * s); },
            [=](double s) { return alpha * beta / std::pow(std::cosh(beta * s), 2); }, 0.0, smax};
}

} // namespace

TEST_CASE("criterion 1: constant-metric regression", "[c1]") {
    Criterion c(1, "constant-metric regression, eps = 1/2");
    const auto t0 = std::chrono::steady_clock::now();
    const ConstantMetricReport rep = constant_metric_regression(0.5, 41);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    c.expect(!rep.reality_failure, "pipeline must run for eps = 1/2");
    c.expect(rep.result.trajectory.has_value() && !rep.result.trajectory->truncated() &&
                 rep.result.trajectory->s_end() == 1.0,
             "trajectory must reach s = 1");
    if (rep.result.trajectory) {
        c.expect_le(std::abs(rep.result.trajectory->a(1.0) - 1.0), 1e-10, "|a(1) - 1|");
        c.expect_le(std::abs(rep.result.trajectory->b(1.0) - 1.0 / std::sqrt(2.0)), 1e-10,
                    "|b(1) - 1/sqrt(2)|");
    }
    c.expect_le(rep.max_J_err, 1e-12, "max |det J + 1|");
    c.expect_le(rep.max_E_err, 1e-9, "max |E - 1/2|");
    c.expect_le(rep.max_G_err, 1e-9, "max |G - 2|");
    c.expect_le(rep.max_induced_err, 5e-6, "max induced-form defect vs (1/2, 0, 2)");
    c.expect_le(seconds, 5.0, "runtime [s]");
    c.note("runtime " + format_double(seconds) + " s");
    c.finish();
}

TEST_CASE("criterion 2: reality boundary at eps = 2^-1/2", "[c2]") {
    Criterion c(2, "reality boundary located by bisection");

    auto completes = [](double eps) {
        PipelineConfig cfg;
        cfg.ghat_formula = "1";
        cfg.delta = eps;
        cfg.s_max = 0.05;
        cfg.grid_nu = 5;
        cfg.grid_nv = 5;
        return !run_pipeline(cfg).reality_at_start;
    };

    c.expect(completes(0.7), "eps = 0.7 must complete");
    c.expect(!completes(0.8), "eps = 0.8 must halt with a reality violation at s = 0");

    double lo = 0.7, hi = 0.8;
    while (hi - lo > 5e-4) {
        const double mid = 0.5 * (lo + hi);
        (completes(mid) ? lo : hi) = mid;
    }
    const double boundary = 0.5 * (lo + hi);
    c.expect_le(std::abs(boundary - 1.0 / std::sqrt(2.0)), 1e-3,
                "|bisected boundary - 2^-1/2|");
    c.note("boundary estimate " + format_double(boundary));
    c.finish();
}

TEST_CASE("criterion 3: plane-metric substitution identity", "[c3]") {
    Criterion c(3, "substitution identity for 20 random monotone pairs");
    std::mt19937 rng(60301);
    std::uniform_real_distribution<double> xd(0.6, 1.0), yd(0.05, 0.5);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        const InitialData1D a = random_monotone(rng, 2.2);
        const InitialData1D b = random_monotone(rng, 2.2);
        const OrthogonalMetric eg = EG_from_ab(a, b);
        for (int k = 0; k < 500; ++k) {
            const double x = xd(rng), y = yd(rng);
            const Vec2 uv{a.value(x + y), b.value(x - y)};
            const double E = eg.E()(uv), Gm1 = eg.G()(uv) - 1.0;
            const double ux = a.slope(x + y), uy = ux;
            const double vx = b.slope(x - y), vy = -vx;
            worst = std::max({worst, std::abs(E * ux * ux + Gm1 * vx * vx - 1.0),
                              std::abs(E * ux * uy + Gm1 * vx * vy),
                              std::abs(E * uy * uy + Gm1 * vy * vy - 1.0)});
        }
    }
    c.expect_le(worst, 1e-9, "max residual of the three equations");
    c.finish();
}

TEST_CASE("criterion 4: augmented-determinant factorization", "[c4]") {
    Criterion c(4, "determinant equals consistency residual times Jacobian");
    std::mt19937 rng(60401);
    std::uniform_real_distribution<double> coef(-0.6, 0.6), gpos(0.2, 3.0), coord(-1.0, 1.0);
    double worst = 0.0;
    int samples = 0;
    while (samples < 500) {
        // A random smooth field pair with analytic partials, sampled at
        // random points.
        const double a1 = 1 + coef(rng), a2 = coef(rng), a3 = coef(rng);
        const double b1 = coef(rng), b2 = 1 + coef(rng), b3 = coef(rng);
        const double g0 = gpos(rng), g1 = coef(rng);
        for (int k = 0; k < 50 && samples < 500; ++k, ++samples) {
            const double uh = coord(rng), vh = coord(rng);
            const Vec2 up{a1 + a3 * vh + std::cos(uh), a2 + a3 * uh};
            const Vec2 vp{b1 + b3 * vh, b2 + b3 * uh - std::sin(vh)};
            const double g = g0 + g1 * std::sin(uh + vh) + 1.0;
            const double det = augmented_determinant(g, up, vp);
            const double jac = up.x * vp.y - up.y * vp.x;
            worst = std::max(worst, std::abs(det - consistency_residual(g, up, vp) * jac));
        }
    }
    c.expect_le(worst, 1e-9, "max |det - residual * J|");
    c.finish();
}

TEST_CASE("criterion 5: recovered components pull back to the given metric", "[c5]") {
    Criterion c(5, "pullback of R du^2 + S dv^2 equals the geodesic form");
    const Rect box{-1.0, 1.0, -1.0, 1.0};
    for (const char* text : {"1", "1+0.1*uhat", "exp(2*uhat)"}) {
        auto ghat = ScalarField2::from_expression(Expression::parse(text), box);
        auto u = solve_u_hat(InitialData1D::identity(-2.0, 2.0), box);
        const double delta = choose_hhat(ghat, box, 0.5).delta;
        auto v = solve_v_hat(ghat, InitialData1D::linear(delta, -1.0, 1.0));
        const ParamMap2 fwd = assemble(u, v);
        const Rect w = working_subdomain(fwd);
        LevelComponents comps(ghat, u, v, fwd);

        double worst = 0.0;
        Vec2 seed = w.center();
        for (int j = 0; j < 12; ++j)
            for (int i = 0; i < 12; ++i) {
                const Vec2 p{w.x0 + w.width() * (i + 0.5) / 12.0,
                             w.y0 + w.height() * (j + 0.5) / 12.0};
                auto rs_form = [&](Vec2 uv) {
                    const LevelPoint lp = comps.at(uv, seed);
                    seed = lp.uhat_point;
                    return FirstFundamentalForm{lp.R, 0.0, lp.S};
                };
                const FirstFundamentalForm f = pullback(rs_form, fwd, p);
                worst = std::max({worst, std::abs(f.E - 1.0), std::abs(f.F),
                                  std::abs(f.G - ghat(p))});
            }
        c.expect_le(worst, 1e-6, std::string("max pullback defect for Ghat = ") + text);
    }
    c.finish();
}

TEST_CASE("criterion 6: E = R and G = S enforced on the initial curve", "[c6]") {
    Criterion c(6, "on-curve residuals for flat and curved metrics");
    for (const char* text : {"1", "cos(uhat)^2", "exp(2*uhat)"}) {
        PipelineConfig cfg;
        cfg.ghat_formula = text;
        cfg.domain = {-1.0, 1.0, -1.0, 1.0};
        cfg.s_max = 0.3;
        cfg.grid_nu = 21;
        cfg.grid_nv = 21;
        const PipelineResult res = run_pipeline(cfg);
        c.expect(res.report.has_value(), std::string("pipeline must complete for ") + text);
        if (!res.report) continue;
        c.expect_le(res.report->on_curve_E_minus_R.max, 1e-5,
                    std::string("max on-curve |E - R| for Ghat = ") + text);
        c.expect_le(res.report->on_curve_G_minus_S.max, 1e-5,
                    std::string("max on-curve |G - S| for Ghat = ") + text);
    }
    c.finish();
}

TEST_CASE("criterion 7: off-curve fields measured, never asserted for curved metrics",
          "[c7]") {
    Criterion c(7, "off-curve residual and curvature diagnostics emitted");

    auto run = [](const char* text) {
        PipelineConfig cfg;
        cfg.ghat_formula = text;
        cfg.domain = {-1.0, 1.0, -1.0, 1.0};
        cfg.s_max = 0.3;
        cfg.grid_nu = 21;
        cfg.grid_nv = 21;
        return run_pipeline(cfg);
    };

    {
        // Constant metric: the claim holds everywhere.
        const PipelineResult res = run("1");
        c.expect(res.report.has_value(), "flat pipeline must complete");
        if (res.report) {
            c.expect(res.report->off_curve_E_minus_R.count > 0, "off-curve fields emitted");
            c.expect_le(res.report->off_curve_E_minus_R.max, 1e-6, "flat off-curve |E - R|");
            c.expect_le(res.report->off_curve_G_minus_S.max, 1e-6, "flat off-curve |G - S|");
        }
    }
    {
        // Flat but non-constant: curvature vanishes, so the case is
        // reported per its curvature; the residual is recorded, not judged.
        const PipelineResult res = run("(1+0.1*uhat)^2");
        c.expect(res.report.has_value(), "flat non-constant pipeline must complete");
        if (res.report) {
            c.expect(std::abs(res.K_domain_min) <= 1e-5 && std::abs(res.K_domain_max) <= 1e-5,
                     "intrinsic curvature of (1+0.1 uhat)^2 vanishes");
            c.expect(std::isfinite(res.report->off_curve_E_minus_R.max) &&
                         std::isfinite(res.report->off_curve_G_minus_S.max),
                     "off-curve fields finite");
            c.note("(1+0.1*uhat)^2: K = 0, off-curve max |E-R| = " +
                   format_double(res.report->off_curve_E_minus_R.max) + ", |G-S| = " +
                   format_double(res.report->off_curve_G_minus_S.max) + " (reported only)");
        }
    }
    {
        // Curved metric: fields must exist and be finite; the curvature
        // diagnostic is emitted alongside.  No tolerance is imposed.
        const PipelineResult res = run("exp(2*uhat)");
        c.expect(res.report.has_value(), "curved pipeline must complete");
        if (res.report) {
            const ResidualReport& r = *res.report;
            c.expect(r.off_curve_E_minus_R.count > 0 && r.off_curve_G_minus_S.count > 0,
                     "curved off-curve fields emitted");
            c.expect(std::isfinite(r.off_curve_E_minus_R.max) &&
                         std::isfinite(r.off_curve_G_minus_S.max),
                     "curved off-curve fields finite");
            c.expect(std::isfinite(r.K_intrinsic_min) && std::isfinite(r.K_surface_max),
                     "curvature diagnostics emitted");
            c.note("exp(2*uhat): K_intrinsic in [" + format_double(r.K_intrinsic_min) + ", " +
                   format_double(r.K_intrinsic_max) + "], K_surface in [" +
                   format_double(r.K_surface_min) + ", " + format_double(r.K_surface_max) +
                   "], off-curve max |E-R| = " + format_double(r.off_curve_E_minus_R.max) +
                   ", |G-S| = " + format_double(r.off_curve_G_minus_S.max));
        }
    }
    c.finish();
}

TEST_CASE("criterion 8: induced-form finite differences converge at order 2", "[c8]") {
    Criterion c(8, "FD convergence of the induced form");

    // The constant-metric surface is affine in (u, v), so the FD induced
    // form is exact there at any resolution; assert exactness.
    {
        const ConstantMetricReport r41 = constant_metric_regression(0.5, 41);
        const ConstantMetricReport r81 = constant_metric_regression(0.5, 81);
        c.expect_le(r41.max_induced_err, 1e-10, "affine surface FD defect at 41x41");
        c.expect_le(r81.max_induced_err, 1e-10, "affine surface FD defect at 81x81");
        c.note("affine case exact: defects " + format_double(r41.max_induced_err) + " / " +
               format_double(r81.max_induced_err) + " (order check needs curvature)");
    }

    // The order-2 behavior is measurable on a curved-data surface: halving
    // the grid step must shrink the defect by about 4.
    {
        PipelineConfig cfg;
        cfg.ghat_formula = "exp(2*uhat)";
        cfg.domain = {-1.0, 1.0, -1.0, 1.0};
        cfg.s_max = 0.3;
        cfg.grid_nu = 21;
        cfg.grid_nv = 21;
        const PipelineResult coarse = run_pipeline(cfg);
        cfg.grid_nu = 41;
        cfg.grid_nv = 41;
        const PipelineResult fine = run_pipeline(cfg);
        c.expect(coarse.report.has_value() && fine.report.has_value(),
                 "curved pipelines must complete");
        if (coarse.report && fine.report) {
            // Compare at the common physical nodes (coarse interior).
            double ec = 0.0, ef = 0.0;
            for (int j = 1; j < 20; ++j)
                for (int i = 1; i < 20; ++i) {
                    const double Ec = coarse.report->E.at(i, j);
                    const double dc = std::abs(coarse.report->E_ind.at(i, j) - Ec);
                    const double df = std::abs(fine.report->E_ind.at(2 * i, 2 * j) -
                                               fine.report->E.at(2 * i, 2 * j));
                    const double gc = std::abs(coarse.report->G_ind.at(i, j) -
                                               coarse.report->G.at(i, j));
                    const double gf = std::abs(fine.report->G_ind.at(2 * i, 2 * j) -
                                               fine.report->G.at(2 * i, 2 * j));
                    ec = std::max({ec, dc, gc});
                    ef = std::max({ef, df, gf});
                }
            const double factor = ec / ef;
            c.expect(factor >= 3.5 && factor <= 4.5,
                     "error reduction factor " + format_double(factor) + " outside [3.5, 4.5]");
            c.note("curved case: defect " + format_double(ec) + " -> " + format_double(ef) +
                   ", factor " + format_double(factor));
        }
    }
    c.finish();
}

TEST_CASE("criterion 9: byte-identical reports across runs", "[c9]") {
    Criterion c(9, "determinism of report.json");
    namespace fs = std::filesystem;
    const fs::path dir1 = fs::temp_directory_path() / "isoembed_det1";
    const fs::path dir2 = fs::temp_directory_path() / "isoembed_det2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    constant_metric_regression(0.5, 41, dir1.string());
    constant_metric_regression(0.5, 41, dir2.string());

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream out;
        out << in.rdbuf();
        return out.str();
    };
    const std::string r1 = slurp(dir1 / "report.json");
    const std::string r2 = slurp(dir2 / "report.json");
    c.expect(!r1.empty(), "report.json written");
    c.expect(r1 == r2, "report.json differs between identical runs");
    c.expect(slurp(dir1 / "surface.csv") == slurp(dir2 / "surface.csv"),
             "surface.csv differs between identical runs");
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    c.finish();
}
