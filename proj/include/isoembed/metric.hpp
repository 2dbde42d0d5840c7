#pragma once

// Metric representations: scalar component fields over a parameter
// rectangle, geodesic-parameter and orthogonal-parameter metrics, the
// first fundamental form, pullback under a parameter change, and the
// Gaussian curvature diagnostic K = -(sqrt(G))_uu / sqrt(G).

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "isoembed/expr.hpp"
#include "isoembed/numerics.hpp"

namespace isoembed {

class domain_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Real-valued function of two coordinates with partial-derivative access.
class ScalarField2 {
public:
    using Fn = std::function<double(double, double)>;

    ScalarField2() = default;

    static ScalarField2 from_expression(const Expression& e, Rect domain) {
        ScalarField2 f;
        auto du = e.derivative(ExprVar::Uhat);
        auto dv = e.derivative(ExprVar::Vhat);
        f.f_ = [e](double x, double y) { return e(x, y); };
        f.fx_ = [du](double x, double y) { return du(x, y); };
        f.fy_ = [dv](double x, double y) { return dv(x, y); };
        f.domain_ = domain;
        return f;
    }

    static ScalarField2 from_function(Fn f, Rect domain) {
        ScalarField2 s;
        const double hx = std::max(domain.width(), 1.0) * 1e-6;
        const double hy = std::max(domain.height(), 1.0) * 1e-6;
        s.fx_ = [f, hx](double x, double y) { return (f(x + hx, y) - f(x - hx, y)) / (2 * hx); };
        s.fy_ = [f, hy](double x, double y) { return (f(x, y + hy) - f(x, y - hy)) / (2 * hy); };
        s.f_ = std::move(f);
        s.domain_ = domain;
        return s;
    }

    static ScalarField2 from_function(Fn f, Fn fx, Fn fy, Rect domain) {
        ScalarField2 s;
        s.f_ = std::move(f);
        s.fx_ = std::move(fx);
        s.fy_ = std::move(fy);
        s.domain_ = domain;
        return s;
    }

    static ScalarField2 constant(double v, Rect domain) {
        return from_function([v](double, double) { return v; },
                             [](double, double) { return 0.0; },
                             [](double, double) { return 0.0; }, domain);
    }

    double operator()(double x, double y) const { return f_(x, y); }
    double operator()(Vec2 p) const { return f_(p.x, p.y); }
    double dx(Vec2 p) const { return fx_(p.x, p.y); }
    double dy(Vec2 p) const { return fy_(p.x, p.y); }
    Vec2 gradient(Vec2 p) const { return {dx(p), dy(p)}; }

    const Rect& domain() const { return domain_; }
    bool valid() const { return static_cast<bool>(f_); }

private:
    Fn f_, fx_, fy_;
    Rect domain_{};
};

// First fundamental form (E, F, G) at a point.
struct FirstFundamentalForm {
    double E = 1.0;
    double F = 0.0;
    double G = 1.0;

    bool positive_definite() const { return E > 0.0 && G > 0.0 && E * G - F * F > 0.0; }
};

namespace detail {

// Positivity is checked on a sampling grid, not symbolically: the
// component may come from user-supplied text.
inline void check_positive(const ScalarField2& f, const char* what, int n = 64) {
    const Rect& d = f.domain();
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            Vec2 p{d.x0 + d.width() * i / (n - 1), d.y0 + d.height() * j / (n - 1)};
            const double v = f(p);
            if (!(v > 0.0) || !std::isfinite(v))
                throw domain_error(std::string(what) + " is not positive at (" +
                                   format_double(p.x) + ", " + format_double(p.y) +
                                   "): value " + format_double(v));
        }
    }
}

} // namespace detail

// Metric ds^2 = duhat^2 + Ghat(uhat,vhat) dvhat^2 in geodesic parameters.
class GeodesicMetric {
public:
    GeodesicMetric(ScalarField2 ghat) : ghat_(std::move(ghat)) {
        detail::check_positive(ghat_, "Ghat");
    }

    static GeodesicMetric from_expression(const Expression& e, Rect domain) {
        GeodesicMetric m(ScalarField2::from_expression(e, domain));
        m.expr_ = e;
        return m;
    }

    const ScalarField2& ghat() const { return ghat_; }
    const Rect& domain() const { return ghat_.domain(); }
    const std::optional<Expression>& expression() const { return expr_; }

private:
    ScalarField2 ghat_;
    std::optional<Expression> expr_;
};

// Metric ds^2 = E du^2 + G dv^2 (F identically zero).
class OrthogonalMetric {
public:
    OrthogonalMetric(ScalarField2 E, ScalarField2 G) : E_(std::move(E)), G_(std::move(G)) {
        detail::check_positive(E_, "E");
        detail::check_positive(G_, "G");
    }

    const ScalarField2& E() const { return E_; }
    const ScalarField2& G() const { return G_; }
    FirstFundamentalForm at(Vec2 p) const { return {E_(p), 0.0, G_(p)}; }

private:
    ScalarField2 E_, G_;
};

// Pull a form field back through a parameter map: J^T M J with J the
// Jacobian of the map at p and M the form at the image point.
template <typename FormField, typename MapT>
FirstFundamentalForm pullback(const FormField& form, const MapT& map, Vec2 p) {
    const Mat2 J = map.jacobian(p);
    if (J.det() == 0.0) throw domain_error("pullback: singular Jacobian");
    const FirstFundamentalForm M = form(map(p));
    const double e = J.a11 * (M.E * J.a11 + M.F * J.a21) + J.a21 * (M.F * J.a11 + M.G * J.a21);
    const double f = J.a11 * (M.E * J.a12 + M.F * J.a22) + J.a21 * (M.F * J.a12 + M.G * J.a22);
    const double g = J.a12 * (M.E * J.a12 + M.F * J.a22) + J.a22 * (M.F * J.a12 + M.G * J.a22);
    return {e, f, g};
}

// Gaussian curvature of a geodesic-parameter metric.
// Second derivative by nested central differences with h = width * 1e-4.
inline ScalarField2 gaussian_curvature(const GeodesicMetric& m) {
    const ScalarField2 ghat = m.ghat();
    const Rect d = m.domain();
    const double h = d.width() * 1e-4;
    auto w = [ghat](double u, double v) {
        const double g = ghat(u, v);
        if (!(g > 0.0)) throw domain_error("gaussian_curvature: Ghat <= 0 at evaluation point");
        return std::sqrt(g);
    };
    auto k = [w, h](double u, double v) {
        auto wu = [&](double uu) { return (w(uu + h, v) - w(uu - h, v)) / (2 * h); };
        const double wuu = (wu(u + h) - wu(u - h)) / (2 * h);
        return -wuu / w(u, v);
    };
    return ScalarField2::from_function(k, d);
}

} // namespace isoembed
