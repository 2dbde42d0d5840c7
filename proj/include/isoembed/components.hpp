#pragma once

// Linear-algebraic consistency machinery for the component system
//
//   1 = R u_uhat^2 + S v_uhat^2
//   0 = R u_uhat u_vhat + S v_uhat v_vhat
//   G = R u_vhat^2 + S v_vhat^2
//
// and the Cramer-rule recovery of the level-parameter components
//   R = u_vhat^-2 G/(G+1),   S = v_vhat^-2 G^2/(G+1),
// composed with the numerical inverse of the parameter map so that R and
// S become functions of (u, v).

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "isoembed/characteristics.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/numerics.hpp"
#include "isoembed/transform.hpp"

namespace isoembed {

class consistency_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// u_vhat v_vhat + G u_uhat v_uhat; vanishes for fields solving the PDE pair.
inline double consistency_residual(double ghat, Vec2 u_partials, Vec2 v_partials) {
    return u_partials.y * v_partials.y + ghat * u_partials.x * v_partials.x;
}

// Determinant of the augmented matrix
//   [ u_uhat^2         v_uhat^2         1 ]
//   [ u_uhat u_vhat    v_uhat v_vhat    0 ]
//   [ u_vhat^2         v_vhat^2         G ]
// by direct cofactor expansion (the factored form is checked in tests).
inline double augmented_determinant(double ghat, Vec2 u_partials, Vec2 v_partials) {
    const double a11 = u_partials.x * u_partials.x, a12 = v_partials.x * v_partials.x;
    const double a21 = u_partials.x * u_partials.y, a22 = v_partials.x * v_partials.y;
    const double a31 = u_partials.y * u_partials.y, a32 = v_partials.y * v_partials.y;
    return (a21 * a32 - a22 * a31) + ghat * (a11 * a22 - a12 * a21);
}

// Everything the rest of the pipeline needs at one level-parameter point.
struct LevelPoint {
    Vec2 uhat_point;    // (f(u,v), g(u,v))
    double ghat = 0.0;  // G at the preimage
    Vec2 u_partials;    // (u_uhat, u_vhat) at the preimage
    Vec2 v_partials;    // (v_uhat, v_vhat) at the preimage
    double hhat_v = 0.0;  // v_vhat, the slope entering S and the reality check
    double R = 0.0;
    double S = 0.0;
    double jacobian_det = 0.0;
};

// R and S as functions of (u, v): each query inverts the forward map by
// seeded Newton and applies the Cramer formulas at the preimage.  Pure
// given a seed, so safe to call from many threads.
class LevelComponents {
public:
    LevelComponents(ScalarField2 ghat, CharacteristicSolution u_sol, CharacteristicSolution v_sol,
                    ParamMap2 forward)
        : ghat_(std::move(ghat)), u_sol_(std::move(u_sol)), v_sol_(std::move(v_sol)),
          forward_(std::move(forward)) {}

    const ParamMap2& forward() const { return forward_; }
    const ScalarField2& ghat() const { return ghat_; }
    const CharacteristicSolution& u_solution() const { return u_sol_; }
    const CharacteristicSolution& v_solution() const { return v_sol_; }

    LevelPoint at(Vec2 uv, Vec2 seed) const {
        const Vec2 p = forward_.invert(uv, seed);
        return at_preimage(p);
    }

    // Same formulas evaluated directly at a known preimage (uhat, vhat).
    LevelPoint at_preimage(Vec2 p) const {
        LevelPoint out;
        out.uhat_point = p;
        out.ghat = ghat_(p);
        out.u_partials = u_sol_.partials(p);
        out.v_partials = v_sol_.partials(p);
        out.hhat_v = out.v_partials.y;
        if (out.u_partials.y == 0.0)
            throw consistency_error("cramer: u_vhat vanishes at (" + format_double(p.x) + ", " +
                                    format_double(p.y) + ")");
        if (out.v_partials.y == 0.0)
            throw consistency_error("cramer: v_vhat vanishes at (" + format_double(p.x) + ", " +
                                    format_double(p.y) + ")");
        out.R = 1.0 / (out.u_partials.y * out.u_partials.y) * out.ghat / (out.ghat + 1.0);
        out.S = 1.0 / (out.v_partials.y * out.v_partials.y) * out.ghat * out.ghat / (out.ghat + 1.0);
        out.jacobian_det = out.u_partials.x * out.v_partials.y - out.u_partials.y * out.v_partials.x;
        return out;
    }

    double R(Vec2 uv, Vec2 seed) const { return at(uv, seed).R; }
    double S(Vec2 uv, Vec2 seed) const { return at(uv, seed).S; }

private:
    ScalarField2 ghat_;
    CharacteristicSolution u_sol_, v_sol_;
    ParamMap2 forward_;
};

// R, S carried both as exact evaluators and as grid-sampled fields with
// bicubic interpolation over the forward image of a subdomain.
struct ComponentPair {
    LevelComponents components;
    GridField R_grid;
    GridField S_grid;
    Rect uv_box{};  // level-parameter rectangle the grids cover

    double R_interp(Vec2 uv) const { return R_grid.bicubic(uv); }
    double S_interp(Vec2 uv) const { return S_grid.bicubic(uv); }
};

// Cramer recovery gated by the consistency condition: on a sampling grid
// over `subdomain`, the residual u_vhat v_vhat + G u_uhat v_uhat must stay
// below `gate_tol` and all three component equations must hold with the
// recovered R, S.
inline ComponentPair cramer_RS(const ScalarField2& ghat, const CharacteristicSolution& u_sol,
                               const CharacteristicSolution& v_sol, const ParamMap2& forward,
                               Rect subdomain, int grid_n = 33, double gate_tol = 1e-7,
                               double system_tol = 1e-8) {
    LevelComponents comps(ghat, u_sol, v_sol, forward);

    // Gate on the source-side sampling grid and find the image box.
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (int j = 0; j < grid_n; ++j) {
        for (int i = 0; i < grid_n; ++i) {
            const Vec2 p{subdomain.x0 + subdomain.width() * i / (grid_n - 1),
                         subdomain.y0 + subdomain.height() * j / (grid_n - 1)};
            const double g = ghat(p);
            const Vec2 up = u_sol.partials(p);
            const Vec2 vp = v_sol.partials(p);
            const double cr = consistency_residual(g, up, vp);
            if (std::abs(cr) > gate_tol)
                throw consistency_error("consistency residual " + format_double(cr) +
                                        " above gate " + format_double(gate_tol) + " at (" +
                                        format_double(p.x) + ", " + format_double(p.y) + ")");
            const LevelPoint lp = comps.at_preimage(p);
            const double e1 = lp.R * up.x * up.x + lp.S * vp.x * vp.x - 1.0;
            const double e2 = lp.R * up.x * up.y + lp.S * vp.x * vp.y;
            const double e3 = lp.R * up.y * up.y + lp.S * vp.y * vp.y - g;
            if (std::abs(e1) > system_tol || std::abs(e2) > system_tol ||
                std::abs(e3) > system_tol * (1.0 + std::abs(g)))
                throw consistency_error("component system not satisfied by recovered R, S at (" +
                                        format_double(p.x) + ", " + format_double(p.y) + ")");
            const Vec2 uv = forward(p);
            umin = std::min(umin, uv.x); umax = std::max(umax, uv.x);
            vmin = std::min(vmin, uv.y); vmax = std::max(vmax, uv.y);
        }
    }

    // Materialize R, S over the inscribed axis-aligned box of the image.
    // Nodes are filled by exact evaluation with row-continuation seeding.
    const Rect box{umin, umax, vmin, vmax};
    const int gn = 65;
    GridField Rg(gn, gn, box), Sg(gn, gn, box);
    std::vector<Vec2> row_seed(gn, subdomain.center());
    for (int j = 0; j < gn; ++j) {
        Vec2 seed = row_seed[j > 0 ? j - 1 : 0];
        for (int i = 0; i < gn; ++i) {
            const Vec2 uv{Rg.xat(i), Rg.yat(j)};
            try {
                const LevelPoint lp = comps.at(uv, seed);
                Rg.at(i, j) = lp.R;
                Sg.at(i, j) = lp.S;
                seed = lp.uhat_point;
                if (i == 0) row_seed[j] = seed;
            } catch (const std::runtime_error&) {
                Rg.at(i, j) = std::numeric_limits<double>::quiet_NaN();
                Sg.at(i, j) = std::numeric_limits<double>::quiet_NaN();
            }
        }
    }
    return ComponentPair{std::move(comps), std::move(Rg), std::move(Sg), box};
}

} // namespace isoembed
