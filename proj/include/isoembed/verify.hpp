#pragma once

// Numerical measurement of the construction's claims: induced
// first-fundamental-form residuals against the target components, the
// E = R and G = S identities on and off the initial curve, and curvature
// diagnostics (intrinsic K from the given metric, K of the built surface,
// and Brioschi's formula on the induced FD components).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "isoembed/components.hpp"
#include "isoembed/embedding.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/numerics.hpp"
#include "isoembed/ode.hpp"

namespace isoembed {

// Induced first fundamental form at an interior node by central
// differences with the grid step: E = X_u . X_u, F = X_u . X_v, G = X_v . X_v.
inline FirstFundamentalForm induced_fff(const EmbeddedSurface& surf, int i, int j) {
    if (i <= 0 || j <= 0 || i >= surf.nu() - 1 || j >= surf.nv() - 1)
        throw domain_error("induced_fff: boundary node");
    if (!(surf.du() > 0.0) || !(surf.dv() > 0.0))
        throw domain_error("induced_fff: degenerate grid step");
    const Vec3 Xu = (surf.point(i + 1, j) - surf.point(i - 1, j)) * (0.5 / surf.du());
    const Vec3 Xv = (surf.point(i, j + 1) - surf.point(i, j - 1)) * (0.5 / surf.dv());
    return {Xu.dot(Xu), Xu.dot(Xv), Xv.dot(Xv)};
}

// Refined variant evaluating the surface map directly at (u +- hu, v +- hv);
// used for the optional re-inversion pass at a fraction of the grid step.
template <typename SurfaceFn>
FirstFundamentalForm induced_fff_at(const SurfaceFn& X, double u, double v, double hu, double hv) {
    if (!(hu > 0.0) || !(hv > 0.0)) throw domain_error("induced_fff_at: degenerate step");
    const Vec3 Xu = (X(u + hu, v) - X(u - hu, v)) * (0.5 / hu);
    const Vec3 Xv = (X(u, v + hv) - X(u, v - hv)) * (0.5 / hv);
    return {Xu.dot(Xu), Xu.dot(Xv), Xv.dot(Xv)};
}

// Gaussian curvature of the surface grid from FD first and second
// fundamental forms: K = (LN - M^2)/(EG - F^2).
inline double surface_curvature(const EmbeddedSurface& surf, int i, int j) {
    if (i <= 0 || j <= 0 || i >= surf.nu() - 1 || j >= surf.nv() - 1)
        throw domain_error("surface_curvature: boundary node");
    const double du = surf.du(), dv = surf.dv();
    if (!(du > 0.0) || !(dv > 0.0)) throw domain_error("surface_curvature: degenerate grid step");
    const Vec3 Xu = (surf.point(i + 1, j) - surf.point(i - 1, j)) * (0.5 / du);
    const Vec3 Xv = (surf.point(i, j + 1) - surf.point(i, j - 1)) * (0.5 / dv);
    const Vec3 Xuu = (surf.point(i + 1, j) - surf.point(i, j) * 2.0 + surf.point(i - 1, j)) *
                     (1.0 / (du * du));
    const Vec3 Xvv = (surf.point(i, j + 1) - surf.point(i, j) * 2.0 + surf.point(i, j - 1)) *
                     (1.0 / (dv * dv));
    const Vec3 Xuv = (surf.point(i + 1, j + 1) - surf.point(i + 1, j - 1) -
                      surf.point(i - 1, j + 1) + surf.point(i - 1, j - 1)) *
                     (0.25 / (du * dv));
    Vec3 n = Xu.cross(Xv);
    const double nn = n.norm();
    if (nn == 0.0) throw domain_error("surface_curvature: degenerate tangent plane");
    n = n * (1.0 / nn);
    const double E = Xu.dot(Xu), F = Xu.dot(Xv), G = Xv.dot(Xv);
    const double L = Xuu.dot(n), M = Xuv.dot(n), N = Xvv.dot(n);
    return (L * N - M * M) / (E * G - F * F);
}

// Brioschi-type curvature for an orthogonal metric sampled on a grid:
// K = -1/(2 sqrt(EG)) [ d/du (G_u / sqrt(EG)) + d/dv (E_v / sqrt(EG)) ].
// Needs a 2-ring of nodes.
inline double brioschi_curvature(const GridField& E, const GridField& G, int i, int j) {
    const int nx = E.nx(), ny = E.ny();
    if (i < 2 || j < 2 || i > nx - 3 || j > ny - 3)
        throw domain_error("brioschi_curvature: needs a 2-ring neighborhood");
    const double du = E.dx(), dv = E.dy();
    auto P = [&](int ii) {  // G_u / sqrt(EG) at (ii, j)
        const double Gu = (G.at(ii + 1, j) - G.at(ii - 1, j)) / (2 * du);
        return Gu / std::sqrt(E.at(ii, j) * G.at(ii, j));
    };
    auto Q = [&](int jj) {  // E_v / sqrt(EG) at (i, jj)
        const double Ev = (E.at(i, jj + 1) - E.at(i, jj - 1)) / (2 * dv);
        return Ev / std::sqrt(E.at(i, jj) * G.at(i, jj));
    };
    const double dP = (P(i + 1) - P(i - 1)) / (2 * du);
    const double dQ = (Q(j + 1) - Q(j - 1)) / (2 * dv);
    return -(dP + dQ) / (2 * std::sqrt(E.at(i, j) * G.at(i, j)));
}

struct SummaryStat {
    double max = 0.0;
    double mean = 0.0;
    int count = 0;

    void add(double v) {
        if (!std::isfinite(v)) return;
        max = std::max(max, std::abs(v));
        mean += std::abs(v);
        ++count;
    }
    void finish() {
        if (count > 0) mean /= count;
    }
};

// Per-point fields and summary norms for every measured claim.
struct ResidualReport {
    int nu = 0, nv = 0;
    Rect uv_box{};

    // Grids over (u,v); NaN marks nodes the pipeline could not cover.
    GridField E, G, R, S;
    GridField abs_E_minus_R, abs_G_minus_S;
    GridField E_ind, F_ind, G_ind;
    GridField abs_Eind_minus_R, abs_F_ind, abs_Gind_minus_S;  // isometry residual
    GridField K_surface, K_intrinsic, K_brioschi;

    // Residuals restricted to the initial curve (u,v) = (a(s), b(s)).
    std::vector<double> curve_s;
    std::vector<double> curve_E_minus_R;
    std::vector<double> curve_G_minus_S;
    SummaryStat on_curve_E_minus_R, on_curve_G_minus_S;
    SummaryStat on_curve_Eind_minus_R, on_curve_Gind_minus_S;

    // Full-grid (off-curve) summaries.
    SummaryStat off_curve_E_minus_R, off_curve_G_minus_S;
    SummaryStat off_curve_Eind_minus_R, off_curve_F_ind, off_curve_Gind_minus_S;
    SummaryStat induced_E_defect, induced_F_defect, induced_G_defect;  // vs (E, 0, G)
    SummaryStat brioschi_vs_surface;

    double K_intrinsic_min = 0.0, K_intrinsic_max = 0.0;
    double K_surface_min = 0.0, K_surface_max = 0.0;

    // Flags.
    bool reality_violation = false;
    double reality_violation_s = 0.0;
    std::string truncation_reason;
    double min_margin_on_curve = std::numeric_limits<double>::infinity();
    bool S_le_1_somewhere = false;
    double S_min = std::numeric_limits<double>::infinity();
    int domain_exit_nodes = 0;
    int surface_holes = 0;
    int covered_nodes = 0;
};

struct ClaimInputs {
    const GeodesicMetric* metric = nullptr;
    const LevelComponents* comps = nullptr;
    const ODETrajectory* traj = nullptr;
    const OrthogonalMetric* eg = nullptr;
    const EmbeddedSurface* surf = nullptr;
    const InitialData1D* a_data = nullptr;  // enable on-curve isometry sampling when given
    const InitialData1D* b_data = nullptr;
    int curve_samples = 129;
};

// Evaluate E - R and G - S along the parametric curve (a(s), b(s)) (where
// the ODE construction enforces them) and on the full 2-D grid (where the
// claim is merely measured, never asserted), together with the curvature
// diagnostics.
inline ResidualReport check_claim(const ClaimInputs& in) {
    if (!in.metric || !in.comps || !in.traj || !in.eg || !in.surf)
        throw std::invalid_argument("check_claim: missing pipeline artifacts");
    const EmbeddedSurface& surf = *in.surf;
    const int nu = surf.nu(), nv = surf.nv();

    ResidualReport rep;
    rep.nu = nu;
    rep.nv = nv;
    rep.uv_box = surf.uv_box();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto blank = [&](GridField& g) {
        g = GridField(std::max(nu, 2), std::max(nv, 2), rep.uv_box);
        std::fill(g.data().begin(), g.data().end(), nan);
    };
    blank(rep.E); blank(rep.G); blank(rep.R); blank(rep.S);
    blank(rep.abs_E_minus_R); blank(rep.abs_G_minus_S);
    blank(rep.E_ind); blank(rep.F_ind); blank(rep.G_ind);
    blank(rep.abs_Eind_minus_R); blank(rep.abs_F_ind); blank(rep.abs_Gind_minus_S);
    blank(rep.K_surface); blank(rep.K_intrinsic); blank(rep.K_brioschi);

    const ScalarField2 K_field = gaussian_curvature(*in.metric);

    // On-curve pass: the trajectory enforces both identities there.
    const double s_end = in.traj->s_end();
    Vec2 seed{0.0, 0.0};
    for (int k = 0; k < in.curve_samples; ++k) {
        const double s = s_end * k / std::max(1, in.curve_samples - 1);
        const double a = in.traj->a(s), b = in.traj->b(s);
        LevelPoint lp;
        try {
            lp = in.comps->at({a, b}, seed);
        } catch (const std::runtime_error&) {
            break;  // curve left the invertible neighborhood
        }
        seed = lp.uhat_point;
        const double Ev = in.eg->E()({a, b});
        const double Gv = in.eg->G()({a, b});
        rep.curve_s.push_back(s);
        rep.curve_E_minus_R.push_back(Ev - lp.R);
        rep.curve_G_minus_S.push_back(Gv - lp.S);
        rep.on_curve_E_minus_R.add(Ev - lp.R);
        rep.on_curve_G_minus_S.add(Gv - lp.S);
        rep.min_margin_on_curve = std::min(rep.min_margin_on_curve, lp.S - 1.0);

        // Isometry residual on the curve: induced form by re-inversion at a
        // fraction of the grid step, where the stencil stays in range.
        if (in.a_data && in.b_data) {
            const double hu = surf.du() / 8, hv = surf.dv() / 8;
            if (hu > 0.0 && hv > 0.0) {
                try {
                    auto X = [&](double uu, double vv) {
                        const Vec2 xy = invert_plane(*in.a_data, *in.b_data, {uu, vv});
                        return Vec3{xy.x, xy.y, vv};
                    };
                    const FirstFundamentalForm f = induced_fff_at(X, a, b, hu, hv);
                    rep.on_curve_Eind_minus_R.add(f.E - lp.R);
                    rep.on_curve_Gind_minus_S.add(f.G - lp.S);
                } catch (const domain_error&) {
                    // stencil left the monotone range near the curve ends
                }
            }
        }
    }
    rep.on_curve_E_minus_R.finish();
    rep.on_curve_G_minus_S.finish();
    rep.on_curve_Eind_minus_R.finish();
    rep.on_curve_Gind_minus_S.finish();

    if (in.traj->truncated()) {
        rep.truncation_reason = in.traj->truncation_reason();
        if (rep.truncation_reason.find("reality violation") != std::string::npos) {
            rep.reality_violation = true;
            rep.reality_violation_s = in.traj->truncation_s();
        }
    }

    // Grid pass: E, G, R, S, the induced form, and curvatures per node.
    rep.K_intrinsic_min = rep.K_surface_min = std::numeric_limits<double>::infinity();
    rep.K_intrinsic_max = rep.K_surface_max = -std::numeric_limits<double>::infinity();
    std::vector<Vec2> row_seed(static_cast<size_t>(nv), Vec2{0.0, 0.0});
    for (int j = 0; j < nv; ++j) {
        Vec2 s2 = (j > 0) ? row_seed[j - 1] : Vec2{0.0, 0.0};
        for (int i = 0; i < nu; ++i) {
            const double u = surf.uat(i), v = surf.vat(j);
            double Ev = nan, Gv = nan;
            try {
                Ev = in.eg->E()({u, v});
                Gv = in.eg->G()({u, v});
                rep.E.at(i, j) = Ev;
                rep.G.at(i, j) = Gv;
            } catch (const std::runtime_error&) {}
            try {
                const LevelPoint lp = in.comps->at({u, v}, s2);
                s2 = lp.uhat_point;
                if (i == 0) row_seed[j] = s2;
                rep.R.at(i, j) = lp.R;
                rep.S.at(i, j) = lp.S;
                rep.K_intrinsic.at(i, j) = K_field(lp.uhat_point);
                rep.S_min = std::min(rep.S_min, lp.S);
                if (lp.S <= 1.0) rep.S_le_1_somewhere = true;
                ++rep.covered_nodes;
                if (std::isfinite(Ev)) {
                    rep.abs_E_minus_R.at(i, j) = std::abs(Ev - lp.R);
                    rep.off_curve_E_minus_R.add(Ev - lp.R);
                }
                if (std::isfinite(Gv)) {
                    rep.abs_G_minus_S.at(i, j) = std::abs(Gv - lp.S);
                    rep.off_curve_G_minus_S.add(Gv - lp.S);
                }
                if (std::isfinite(rep.K_intrinsic.at(i, j))) {
                    rep.K_intrinsic_min = std::min(rep.K_intrinsic_min, rep.K_intrinsic.at(i, j));
                    rep.K_intrinsic_max = std::max(rep.K_intrinsic_max, rep.K_intrinsic.at(i, j));
                }
            } catch (const std::runtime_error&) {
                ++rep.domain_exit_nodes;
            }
        }
    }

    auto ring_valid = [&](int i, int j) {
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di)
                if (!surf.node_valid(i + di, j + dj)) return false;
        return true;
    };
    for (int j = 1; j + 1 < nv; ++j) {
        for (int i = 1; i + 1 < nu; ++i) {
            if (!ring_valid(i, j)) continue;
            const FirstFundamentalForm f = induced_fff(surf, i, j);
            rep.E_ind.at(i, j) = f.E;
            rep.F_ind.at(i, j) = f.F;
            rep.G_ind.at(i, j) = f.G;
            if (std::isfinite(rep.E.at(i, j))) rep.induced_E_defect.add(f.E - rep.E.at(i, j));
            if (std::isfinite(rep.G.at(i, j))) rep.induced_G_defect.add(f.G - rep.G.at(i, j));
            rep.induced_F_defect.add(f.F);
            rep.abs_F_ind.at(i, j) = std::abs(f.F);
            rep.off_curve_F_ind.add(f.F);
            if (std::isfinite(rep.R.at(i, j))) {
                rep.abs_Eind_minus_R.at(i, j) = std::abs(f.E - rep.R.at(i, j));
                rep.off_curve_Eind_minus_R.add(f.E - rep.R.at(i, j));
            }
            if (std::isfinite(rep.S.at(i, j))) {
                rep.abs_Gind_minus_S.at(i, j) = std::abs(f.G - rep.S.at(i, j));
                rep.off_curve_Gind_minus_S.add(f.G - rep.S.at(i, j));
            }
            const double ks = surface_curvature(surf, i, j);
            rep.K_surface.at(i, j) = ks;
            rep.K_surface_min = std::min(rep.K_surface_min, ks);
            rep.K_surface_max = std::max(rep.K_surface_max, ks);
        }
    }
    for (int j = 2; j + 2 < nv; ++j)
        for (int i = 2; i + 2 < nu; ++i) {
            bool ok = true;
            for (int dj = -2; dj <= 2 && ok; ++dj)
                for (int di = -2; di <= 2 && ok; ++di)
                    ok = std::isfinite(rep.E_ind.at(i + di, j + dj)) &&
                         std::isfinite(rep.G_ind.at(i + di, j + dj));
            if (!ok) continue;
            const double kb = brioschi_curvature(rep.E_ind, rep.G_ind, i, j);
            rep.K_brioschi.at(i, j) = kb;
            if (std::isfinite(rep.K_surface.at(i, j)))
                rep.brioschi_vs_surface.add(kb - rep.K_surface.at(i, j));
        }

    rep.off_curve_E_minus_R.finish();
    rep.off_curve_G_minus_S.finish();
    rep.off_curve_Eind_minus_R.finish();
    rep.off_curve_F_ind.finish();
    rep.off_curve_Gind_minus_S.finish();
    rep.induced_E_defect.finish();
    rep.induced_F_defect.finish();
    rep.induced_G_defect.finish();
    rep.brioschi_vs_surface.finish();
    rep.surface_holes = surf.hole_count();
    return rep;
}

} // namespace isoembed
