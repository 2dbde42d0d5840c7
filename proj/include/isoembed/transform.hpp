#pragma once

// Parameter transformations assembled from PDE solution fields, their
// Jacobians, and numerical inversion: the geodesic-to-level map
// (uhat,vhat) -> (u,v) and the plane map (x,y) -> (u,v) with its
// specialized inverse x = H(u,v), y = H*(u,v).

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoembed/characteristics.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/numerics.hpp"

namespace isoembed {

class inversion_error : public std::runtime_error {
public:
    inversion_error(const std::string& what, Vec2 last, double residual)
        : std::runtime_error(what + " (last iterate (" + format_double(last.x) + ", " +
                             format_double(last.y) + "), residual " + format_double(residual) + ")"),
          last_(last), residual_(residual) {}
    Vec2 last_iterate() const { return last_; }
    double residual() const { return residual_; }

private:
    Vec2 last_;
    double residual_;
};

// Differentiable map between two planar parameter rectangles.
class ParamMap2 {
public:
    static constexpr double kNewtonTol = 1e-11;
    static constexpr int kNewtonMaxIter = 25;
    static constexpr int kNewtonMaxHalvings = 6;

    ParamMap2() = default;
    ParamMap2(ScalarField2 fx, ScalarField2 fy, Rect source_domain)
        : fx_(std::move(fx)), fy_(std::move(fy)), source_domain_(source_domain) {}

    Vec2 operator()(Vec2 p) const { return {fx_(p), fy_(p)}; }

    Mat2 jacobian(Vec2 p) const {
        const Vec2 gx = fx_.gradient(p);
        const Vec2 gy = fy_.gradient(p);
        return {gx.x, gx.y, gy.x, gy.y};
    }
    double jacobian_det(Vec2 p) const { return jacobian(p).det(); }

    const Rect& source_domain() const { return source_domain_; }
    const ScalarField2& component_x() const { return fx_; }
    const ScalarField2& component_y() const { return fy_; }

    // Newton iteration on forward(p) - q with the analytic Jacobian;
    // the step is halved while the residual fails to decrease, and the
    // iterates are confined to the source rectangle where the component
    // fields are defined.
    Vec2 invert(Vec2 q, Vec2 seed) const {
        auto clamp_to_domain = [this](Vec2 p) {
            return Vec2{std::clamp(p.x, source_domain_.x0, source_domain_.x1),
                        std::clamp(p.y, source_domain_.y0, source_domain_.y1)};
        };
        Vec2 p = clamp_to_domain(seed);
        Vec2 r = (*this)(p) - q;
        double rn = r.norm();
        for (int it = 0; it < kNewtonMaxIter; ++it) {
            if (rn <= kNewtonTol) return p;
            const Mat2 J = jacobian(p);
            if (J.det() == 0.0 || !std::isfinite(J.det()))
                throw inversion_error("invert: singular Jacobian", p, rn);
            const Vec2 step = J.solve(r);
            double scale = 1.0;
            Vec2 pn;
            Vec2 rnew;
            double rn_new = 0.0;
            int halvings = 0;
            for (;;) {
                pn = clamp_to_domain({p.x - scale * step.x, p.y - scale * step.y});
                try {
                    rnew = (*this)(pn) - q;
                    rn_new = rnew.norm();
                } catch (const characteristic_exit_error&) {
                    // Trial point left the territory the Cauchy data
                    // determines; shorten the step like any bad trial.
                    rn_new = std::numeric_limits<double>::infinity();
                }
                if (rn_new < rn || halvings >= kNewtonMaxHalvings) break;
                scale *= 0.5;
                ++halvings;
            }
            if (!std::isfinite(rn_new))
                throw inversion_error("invert: iterates left the determined region", p, rn);
            p = pn;
            r = rnew;
            rn = rn_new;
        }
        if (rn <= kNewtonTol) return p;
        throw inversion_error("invert: max iterations exceeded", p, rn);
    }

private:
    ScalarField2 fx_, fy_;
    Rect source_domain_{};
};

inline ParamMap2 assemble(const ScalarField2& u_field, const ScalarField2& v_field, Rect domain) {
    return ParamMap2(u_field, v_field, domain);
}

inline ParamMap2 assemble(const CharacteristicSolution& u_sol,
                          const CharacteristicSolution& v_sol) {
    return ParamMap2(u_sol.as_field(), v_sol.as_field(), u_sol.domain());
}

inline ParamMap2 identity_map(Rect domain) {
    return ParamMap2(
        ScalarField2::from_function([](double x, double) { return x; },
                                    [](double, double) { return 1.0; },
                                    [](double, double) { return 0.0; }, domain),
        ScalarField2::from_function([](double, double y) { return y; },
                                    [](double, double) { return 0.0; },
                                    [](double, double) { return 1.0; }, domain),
        domain);
}

// The plane map (x,y) -> (a(x+y), b(x-y)) as a ParamMap2.
inline ParamMap2 plane_map(const InitialData1D& a, const InitialData1D& b, Rect domain) {
    auto u = ScalarField2::from_function(
        [a](double x, double y) { return a.value(x + y); },
        [a](double x, double y) { return a.slope(x + y); },
        [a](double x, double y) { return a.slope(x + y); }, domain);
    auto v = ScalarField2::from_function(
        [b](double x, double y) { return b.value(x - y); },
        [b](double x, double y) { return b.slope(x - y); },
        [b](double x, double y) { return -b.slope(x - y); }, domain);
    return ParamMap2(u, v, domain);
}

// Specialized inverse of u = a(x+y), v = b(x-y):
//   x = (a^-1(u) + b^-1(v)) / 2,  y = (a^-1(u) - b^-1(v)) / 2.
inline Vec2 invert_plane(const InitialData1D& a, const InitialData1D& b, Vec2 q) {
    const double s = a.inverse(q.x);
    const double sigma = b.inverse(q.y);
    return {0.5 * (s + sigma), 0.5 * (s - sigma)};
}

// Largest grid-aligned rectangle around the initial line vhat = 0 on which
// the map evaluates (characteristics reach the initial line) and |det J|
// stays above `fraction` times its minimum on the line.  Inversion is only
// offered there.  The edge characteristics leave any rectangle sideways as
// soon as G varies, so the rectangle must be allowed to shrink in uhat as
// well; of the admissible candidates the one with the largest area wins.
inline Rect working_subdomain(const ParamMap2& map, double fraction = 0.1, int n = 65) {
    const Rect d = map.source_domain();
    if (!(d.y0 <= 0.0 && d.y1 >= 0.0))
        throw domain_error("working_subdomain: domain does not contain the initial line");

    double ref = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double det = map.jacobian_det({d.x0 + d.width() * i / (n - 1), 0.0});
        if (!std::isfinite(det)) ref = 0.0;
        ref = std::min(ref, std::abs(det));
    }
    if (!(ref > 0.0))
        throw domain_error("working_subdomain: Jacobian degenerate on the initial line");
    const double threshold = fraction * ref;

    const double dx = d.width() / (n - 1), dy = d.height() / (n - 1);
    std::vector<uint8_t> mask(static_cast<size_t>(n) * n, 0);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const Vec2 p{d.x0 + i * dx, d.y0 + j * dy};
            try {
                const double det = map.jacobian_det(p);
                mask[static_cast<size_t>(j) * n + i] =
                    std::isfinite(det) && std::abs(det) >= threshold;
            } catch (const characteristic_exit_error&) {
            }
        }
    }

    // Rows straddling vhat = 0 that every candidate must contain.
    int j_dn = 0;
    while (j_dn + 1 < n && d.y0 + (j_dn + 1) * dy <= 0.0) ++j_dn;
    int j_up = j_dn;
    while (d.y0 + j_up * dy < 0.0 && j_up + 1 < n) ++j_up;
    // Column nearest uhat = 0, when the domain contains it.
    int i_pin = -1;
    if (d.x0 <= 0.0 && d.x1 >= 0.0)
        i_pin = std::clamp(static_cast<int>(std::lround(-d.x0 / dx)), 0, n - 1);

    auto best_with_band = [&](int band_lo, int band_hi) {
        Rect best{0, 0, 0, 0};
        double best_area = -1.0;
        std::vector<uint8_t> rowvalid(static_cast<size_t>(n));
        for (int i0 = 0; i0 < n; ++i0) {
            std::fill(rowvalid.begin(), rowvalid.end(), 1);
            for (int i1 = i0; i1 < n; ++i1) {
                for (int j = 0; j < n; ++j)
                    rowvalid[j] = rowvalid[j] && mask[static_cast<size_t>(j) * n + i1];
                if (i_pin >= 0 && (i_pin < i0 || i_pin > i1)) continue;
                bool band_ok = true;
                for (int j = band_lo; j <= band_hi && band_ok; ++j) band_ok = rowvalid[j];
                if (!band_ok) continue;
                int jlo = band_lo, jhi = band_hi;
                while (jlo > 0 && rowvalid[jlo - 1]) --jlo;
                while (jhi + 1 < n && rowvalid[jhi + 1]) ++jhi;
                const Rect cand{d.x0 + i0 * dx, d.x0 + i1 * dx, d.y0 + jlo * dy, d.y0 + jhi * dy};
                const double area = cand.width() * cand.height();
                if (area > best_area) {
                    best_area = area;
                    best = cand;
                }
            }
        }
        return std::pair<Rect, double>(best, best_area);
    };

    // Prefer a genuine two-sided neighborhood of the line (one sample row
    // beyond it on each side); fall back to the straddling rows alone.
    auto [best, best_area] = best_with_band(std::max(0, j_dn - 1), std::min(n - 1, j_up + 1));
    if (best_area <= 0.0) std::tie(best, best_area) = best_with_band(j_dn, j_up);
    if (best_area <= 0.0)
        throw domain_error("working_subdomain: no admissible rectangle around the initial line");
    return best;
}

} // namespace isoembed
