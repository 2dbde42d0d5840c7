#pragma once

// Cauchy problems for the four linear first-order PDEs used by the
// construction, solved by the method of characteristics:
//
//   plane pair      u_x - u_y = 0,            v_x + v_y = 0       (data on y = 0)
//   geodesic pair   u_uhat - u_vhat = 0,      G v_uhat + v_vhat = 0  (data on vhat = 0)
//
// The first three have closed-form solutions a(x+y), b(x-y), h(uhat+vhat).
// The fourth is solved by tracing the characteristic ODE
// duhat/dvhat = G(uhat, vhat) back to the initial line; the value is the
// Cauchy datum at the foot point.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoembed/metric.hpp"
#include "isoembed/numerics.hpp"

namespace isoembed {

class characteristic_exit_error : public std::runtime_error {
public:
    characteristic_exit_error(Vec2 exit_point, Vec2 query)
        : std::runtime_error("characteristic through (" + format_double(query.x) + ", " +
                             format_double(query.y) + ") exits the domain at (" +
                             format_double(exit_point.x) + ", " + format_double(exit_point.y) +
                             ") before reaching the initial line"),
          exit_point_(exit_point), query_(query) {}
    Vec2 exit_point() const { return exit_point_; }
    Vec2 query() const { return query_; }

private:
    Vec2 exit_point_, query_;
};

// One-dimensional Cauchy data: a C^1 function with non-vanishing slope
// on an interval. Also serves as a strictly monotone curve with a
// bracketed-Newton inverse.
struct InitialData1D {
    std::function<double(double)> value;
    std::function<double(double)> slope;
    double s0 = 0.0;
    double s1 = 1.0;

    static InitialData1D identity(double s0 = -1.0, double s1 = 1.0) {
        return {[](double s) { return s; }, [](double) { return 1.0; }, s0, s1};
    }
    static InitialData1D linear(double k, double s0 = -1.0, double s1 = 1.0) {
        return {[k](double s) { return k * s; }, [k](double) { return k; }, s0, s1};
    }

    // Spot-check that the slope never vanishes (and never changes sign).
    void check_slope(int samples = 256) const {
        double sign = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double s = s0 + (s1 - s0) * i / (samples - 1);
            const double d = slope(s);
            if (!std::isfinite(d) || d == 0.0)
                throw domain_error("initial data slope vanishes at s = " + format_double(s));
            const double sg = d > 0 ? 1.0 : -1.0;
            if (sign == 0.0) sign = sg;
            else if (sign != sg)
                throw domain_error("initial data slope changes sign at s = " + format_double(s));
        }
    }

    // Solve value(s) = y on [s0, s1] by Newton with a bisection safeguard.
    // Values a few ulps past the range ends (grid arithmetic overshoot)
    // resolve to the endpoint.
    double inverse(double y, double tol = 1e-12) const {
        double lo = s0, hi = s1;
        double flo = value(lo) - y, fhi = value(hi) - y;
        if (flo == 0.0) return lo;
        if (fhi == 0.0) return hi;
        if (flo * fhi > 0.0) {
            const double slack = 1e-13 * (1.0 + std::abs(y));
            if (std::abs(flo) <= slack) return lo;
            if (std::abs(fhi) <= slack) return hi;
            throw domain_error("value " + format_double(y) + " outside monotone range [" +
                               format_double(value(s0)) + ", " + format_double(value(s1)) + "]");
        }
        double s = 0.5 * (lo + hi);
        for (int it = 0; it < 100; ++it) {
            const double f = value(s) - y;
            if (f == 0.0) return s;
            if (f * flo > 0.0) { lo = s; flo = f; } else { hi = s; }
            const double d = slope(s);
            double next = s - f / d;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // fall back to bisection
            if (std::abs(next - s) <= tol * (1.0 + std::abs(s))) return next;
            s = next;
        }
        return s;
    }
};

enum class CharPde { PlaneU, PlaneV, GeodesicU, GeodesicV };

inline const char* char_pde_name(CharPde p) {
    switch (p) {
        case CharPde::PlaneU: return "u_x - u_y = 0";
        case CharPde::PlaneV: return "v_x + v_y = 0";
        case CharPde::GeodesicU: return "u_uhat - u_vhat = 0";
        case CharPde::GeodesicV: return "G v_uhat + v_vhat = 0";
    }
    return "?";
}

// Solution of one of the four PDEs with Cauchy data on the coordinate
// initial line. Immutable after construction; evaluation is pure.
class CharacteristicSolution {
public:
    static constexpr int kCacheNodes = 128;   // foot-point cache resolution
    static constexpr int kTraceSteps = 2048;  // RK4 steps across the full vhat extent

    // Closed-form solutions.
    static CharacteristicSolution plane_u(InitialData1D a, Rect domain) {
        return CharacteristicSolution(CharPde::PlaneU, std::move(a), domain);
    }
    static CharacteristicSolution plane_v(InitialData1D b, Rect domain) {
        return CharacteristicSolution(CharPde::PlaneV, std::move(b), domain);
    }
    static CharacteristicSolution geodesic_u(InitialData1D h, Rect domain) {
        return CharacteristicSolution(CharPde::GeodesicU, std::move(h), domain);
    }

    // Traced solution of G v_uhat + v_vhat = 0.
    static CharacteristicSolution geodesic_v(ScalarField2 ghat, InitialData1D hhat) {
        CharacteristicSolution s(CharPde::GeodesicV, std::move(hhat), ghat.domain());
        s.ghat_ = std::move(ghat);
        s.build_cache();
        return s;
    }

    // Same coefficient field and foot-point cache, different Cauchy data.
    // The cache depends only on G, so this is cheap.
    CharacteristicSolution with_data(InitialData1D data) const {
        CharacteristicSolution s = *this;
        data.check_slope();
        s.data_ = std::move(data);
        return s;
    }

    CharPde pde() const { return pde_; }
    const Rect& domain() const { return domain_; }
    const InitialData1D& data() const { return data_; }
    const ScalarField2& coefficient() const { return ghat_; }

    // Foot point on the initial line carrying the Cauchy datum.
    double foot(Vec2 p) const {
        switch (pde_) {
            case CharPde::PlaneU: return p.x + p.y;
            case CharPde::PlaneV: return p.x - p.y;
            case CharPde::GeodesicU: return p.x + p.y;
            case CharPde::GeodesicV: return cached_foot(p).foot;
        }
        return 0.0;
    }

    double foot_exact(Vec2 p, bool refined = false) const {
        if (pde_ != CharPde::GeodesicV) return foot(p);
        return trace(p, refined).foot;
    }

    double value(Vec2 p) const { return data_.value(foot(p)); }
    double value_exact(Vec2 p, bool refined = false) const {
        return data_.value(foot_exact(p, refined));
    }

    // Partials of the solution field. For the traced PDE the uhat-partial
    // comes from the variational equation along the characteristic and the
    // vhat-partial from the PDE itself: v_vhat = -G v_uhat.
    Vec2 partials(Vec2 p) const {
        switch (pde_) {
            case CharPde::PlaneU: {
                const double d = data_.slope(p.x + p.y);
                return {d, d};
            }
            case CharPde::PlaneV: {
                const double d = data_.slope(p.x - p.y);
                return {d, -d};
            }
            case CharPde::GeodesicU: {
                const double d = data_.slope(p.x + p.y);
                return {d, d};
            }
            case CharPde::GeodesicV: {
                const Foot f = cached_foot(p);
                const double vu = data_.slope(f.foot) * f.dfoot_duhat;
                return {vu, -ghat_(p) * vu};
            }
        }
        return {};
    }

    Vec2 partials_exact(Vec2 p, bool refined = false) const {
        if (pde_ != CharPde::GeodesicV) return partials(p);
        const Foot f = trace(p, refined);
        const double vu = data_.slope(f.foot) * f.dfoot_duhat;
        return {vu, -ghat_(p) * vu};
    }

    // PDE residual with the solution's own coefficients.
    double residual(Vec2 p, Vec2 grad) const {
        switch (pde_) {
            case CharPde::PlaneU: return grad.x - grad.y;
            case CharPde::PlaneV: return grad.x + grad.y;
            case CharPde::GeodesicU: return grad.x - grad.y;
            case CharPde::GeodesicV: return ghat_(p) * grad.x + grad.y;
        }
        return 0.0;
    }

    // Point on the characteristic through p at level vhat = t (traced PDE
    // only); used to check constancy of the solution along characteristics.
    double characteristic_uhat(Vec2 p, double t) const {
        if (pde_ != CharPde::GeodesicV)
            throw std::logic_error("characteristic_uhat: closed-form PDE");
        return trace_between(p, t).foot;
    }

    // Max |foot(n steps) - foot(2n steps)| over probe nodes, recorded at
    // construction (one Richardson halving check).
    double trace_error_estimate() const { return cache_ ? cache_->trace_error_estimate : 0.0; }

    // Field views over (uhat, vhat). The fast view evaluates through the
    // cache; the exact view re-traces every query.
    ScalarField2 as_field() const {
        auto self = *this;
        return ScalarField2::from_function(
            [self](double x, double y) { return self.value({x, y}); },
            [self](double x, double y) { return self.partials({x, y}).x; },
            [self](double x, double y) { return self.partials({x, y}).y; }, domain_);
    }
    ScalarField2 as_field_exact() const {
        auto self = *this;
        return ScalarField2::from_function(
            [self](double x, double y) { return self.value_exact({x, y}, true); },
            [self](double x, double y) { return self.partials_exact({x, y}, true).x; },
            [self](double x, double y) { return self.partials_exact({x, y}, true).y; }, domain_);
    }

private:
    CharacteristicSolution(CharPde pde, InitialData1D data, Rect domain)
        : pde_(pde), data_(std::move(data)), domain_(domain) {
        data_.check_slope();
    }

    struct Foot {
        double foot = 0.0;         // uhat at the initial line
        double dfoot_duhat = 1.0;  // sensitivity to the query uhat
    };

    // Integrate duhat/dt = G(uhat, t) together with its variational
    // equation dphi/dt = G_uhat(uhat, t) phi, phi(p.y) = 1, from t = p.y
    // to t = t_target in nsteps RK4 steps.  A hair of slack at the domain
    // edges keeps boundary characteristics from flapping on rounding.
    Foot integrate_characteristic(Vec2 p, double t_target, int nsteps) const {
        double u = p.x;
        double phi = 1.0;
        const double t0 = p.y;
        const double span = t_target - t0;
        if (span == 0.0) return {u, 1.0};
        const double dt = span / nsteps;
        double t = t0;
        const double pad = 1e-9 * domain_.width();
        const double lo = domain_.x0 - pad, hi = domain_.x1 + pad;
        auto rhs = [&](double uu, double tt, double ph, double& du, double& dphi) {
            du = ghat_(uu, tt);
            dphi = ghat_.dx({uu, tt}) * ph;
        };
        for (int k = 0; k < nsteps; ++k) {
            double k1u, k1p, k2u, k2p, k3u, k3p, k4u, k4p;
            rhs(u, t, phi, k1u, k1p);
            rhs(u + 0.5 * dt * k1u, t + 0.5 * dt, phi + 0.5 * dt * k1p, k2u, k2p);
            rhs(u + 0.5 * dt * k2u, t + 0.5 * dt, phi + 0.5 * dt * k2p, k3u, k3p);
            rhs(u + dt * k3u, t + dt, phi + dt * k3p, k4u, k4p);
            u += dt / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
            phi += dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
            t = (k == nsteps - 1) ? t_target : t0 + dt * (k + 1);
            if (u < lo || u > hi) throw characteristic_exit_error({u, t}, p);
        }
        return {u, phi};
    }

    Foot trace_steps(Vec2 p, int nsteps) const { return integrate_characteristic(p, 0.0, nsteps); }

    int steps_for(double vhat) const {
        const double extent = domain_.height();
        const double h = extent / kTraceSteps;
        return std::max(1, static_cast<int>(std::ceil(std::abs(vhat) / h)));
    }

    Foot trace(Vec2 p, bool refined = false) const {
        if (!domain_.contains(p, 1e-9 * domain_.width()))
            throw characteristic_exit_error(p, p);
        if (p.y == 0.0) return {p.x, 1.0};
        const int n = steps_for(p.y);
        Foot f1 = trace_steps(p, n);
        if (!refined) return f1;
        Foot f2 = trace_steps(p, 2 * n);
        // Richardson extrapolation of the two fourth-order results.
        return {(16.0 * f2.foot - f1.foot) / 15.0,
                (16.0 * f2.dfoot_duhat - f1.dfoot_duhat) / 15.0};
    }

    // Trace from p to an intermediate level t_target (same ODE).
    Foot trace_between(Vec2 p, double t_target) const {
        const double span = p.y - t_target;
        if (span == 0.0) return {p.x, 1.0};
        const int n = std::max(1, static_cast<int>(std::ceil(
                              std::abs(span) / (domain_.height() / kTraceSteps))));
        return integrate_characteristic(p, t_target, n);
    }

    // The cache is split at the initial line so that vhat = 0 is an exact
    // node row (foot = uhat, phi = 1 there, no tracing error), with
    // kCacheNodes columns and kCacheNodes/2 rows per half.  Interpolation
    // is C^1 bicubic: a merely continuous interpolant would put derivative
    // kinks into everything integrated on top of this field.
    struct HalfCache {
        GridField foot;
        GridField phi;
        std::vector<uint8_t> valid;
        bool present = false;

        bool ok(int ii, int jj) const {
            return valid[static_cast<size_t>(jj) * foot.nx() + ii] != 0;
        }
        bool cell_valid(int i, int j) const {
            return ok(i, j) && ok(i + 1, j) && ok(i, j + 1) && ok(i + 1, j + 1);
        }
        // Every node the 4x4 bicubic stencil around cell (i, j) can touch;
        // edge ghosts draw on the three boundary nodes of their side.
        bool stencil_valid(int i, int j) const {
            const int nx = foot.nx(), ny = foot.ny();
            int need_i0 = std::max(0, i - 1), need_i1 = std::min(nx - 1, i + 2);
            int need_j0 = std::max(0, j - 1), need_j1 = std::min(ny - 1, j + 2);
            if (i - 1 < 0) need_i1 = std::max(need_i1, std::min(2, nx - 1));
            if (i + 2 > nx - 1) need_i0 = std::min(need_i0, std::max(0, nx - 3));
            if (j - 1 < 0) need_j1 = std::max(need_j1, std::min(2, ny - 1));
            if (j + 2 > ny - 1) need_j0 = std::min(need_j0, std::max(0, ny - 3));
            for (int m = need_j0; m <= need_j1; ++m)
                for (int n = need_i0; n <= need_i1; ++n)
                    if (!ok(n, m)) return false;
            return true;
        }
    };
    struct FootCache {
        HalfCache lower, upper;
        double trace_error_estimate = 0.0;
    };

    void fill_half(HalfCache& half, Rect box) const {
        constexpr int rows = kCacheNodes / 2;
        if (!(box.height() > 0.0)) return;
        half.foot = GridField(kCacheNodes, rows, box);
        half.phi = GridField(kCacheNodes, rows, box);
        half.valid.assign(static_cast<size_t>(kCacheNodes) * rows, 0);
        half.present = true;
        parallel_for(rows, [this, &half](int j) {
            const double vhat = half.foot.yat(j);
            for (int i = 0; i < kCacheNodes; ++i) {
                const Vec2 p{half.foot.xat(i), vhat};
                try {
                    const Foot f = trace(p);
                    half.foot.at(i, j) = f.foot;
                    half.phi.at(i, j) = f.dfoot_duhat;
                    half.valid[static_cast<size_t>(j) * kCacheNodes + i] = 1;
                } catch (const characteristic_exit_error&) {
                    half.foot.at(i, j) = std::numeric_limits<double>::quiet_NaN();
                    half.phi.at(i, j) = std::numeric_limits<double>::quiet_NaN();
                }
            }
        });
    }

    void build_cache() {
        auto cache = std::make_shared<FootCache>();
        fill_half(cache->lower, Rect{domain_.x0, domain_.x1, domain_.y0, 0.0});
        fill_half(cache->upper, Rect{domain_.x0, domain_.x1, 0.0, domain_.y1});
        // One Richardson halving check on a probe subset.
        double worst = 0.0;
        for (const HalfCache* half : {&cache->lower, &cache->upper}) {
            if (!half->present) continue;
            const int rows = half->foot.ny();
            for (int j = 0; j < rows; j += std::max(1, rows / 4)) {
                for (int i = 0; i < kCacheNodes; i += kCacheNodes / 4) {
                    if (!half->valid[static_cast<size_t>(j) * kCacheNodes + i]) continue;
                    const Vec2 p{half->foot.xat(i), half->foot.yat(j)};
                    if (p.y == 0.0) continue;
                    const int n = steps_for(p.y);
                    const Foot f1 = trace_steps(p, n);
                    const Foot f2 = trace_steps(p, 2 * n);
                    worst = std::max(worst, std::abs(f1.foot - f2.foot));
                }
            }
        }
        cache->trace_error_estimate = worst;
        cache_ = std::move(cache);
    }

    Foot cached_foot(Vec2 p) const {
        if (pde_ != CharPde::GeodesicV) return {foot(p), 1.0};
        const HalfCache& half = (p.y < 0.0) ? cache_->lower : cache_->upper;
        if (!half.present || !domain_.contains(p, 1e-12 * domain_.width()))
            return trace(p);
        const double sx = (p.x - half.foot.domain().x0) / half.foot.dx();
        const double sy = (p.y - half.foot.domain().y0) / half.foot.dy();
        const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, half.foot.nx() - 2);
        const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, half.foot.ny() - 2);
        if (half.stencil_valid(i, j)) return {half.foot.bicubic(p), half.phi.bicubic(p)};
        if (half.cell_valid(i, j)) return {half.foot.bilinear(p), half.phi.bilinear(p)};
        return trace(p);  // exact fallback; throws on genuine exit
    }

    CharPde pde_;
    InitialData1D data_;
    Rect domain_;
    ScalarField2 ghat_;
    std::shared_ptr<const FootCache> cache_;
};

// Closed-form pair over the plane: u = a(x+y), v = b(x-y).
inline std::pair<CharacteristicSolution, CharacteristicSolution>
solve_plane_pair(InitialData1D a, InitialData1D b, Rect domain) {
    return {CharacteristicSolution::plane_u(std::move(a), domain),
            CharacteristicSolution::plane_v(std::move(b), domain)};
}

// u = h(uhat + vhat) with data on vhat = 0; identity data by default.
inline CharacteristicSolution solve_u_hat(InitialData1D h, Rect domain) {
    return CharacteristicSolution::geodesic_u(std::move(h), domain);
}

// Traced solution of G v_uhat + v_vhat = 0 with data hhat on vhat = 0.
inline CharacteristicSolution solve_v_hat(const ScalarField2& ghat, InitialData1D hhat) {
    return CharacteristicSolution::geodesic_v(ghat, std::move(hhat));
}

} // namespace isoembed
