#pragma once

// Assembly of the candidate embedding from solved initial data a(s), b(s):
// the component fields E(u,v) = (1/2) a'(x+y)^-2, G(u,v) - 1 = (1/2) b'(x-y)^-2
// composed with the plane-map inverse, and the surface
// X(u,v) = (H(u,v), H*(u,v), v).

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isoembed/characteristics.hpp"
#include "isoembed/metric.hpp"
#include "isoembed/numerics.hpp"
#include "isoembed/transform.hpp"

namespace isoembed {

// E and G over (u,v); G > 1 holds structurally (G - 1 is a squared
// reciprocal of the b slope).
inline OrthogonalMetric EG_from_ab(const InitialData1D& a, const InitialData1D& b) {
    const double ua = a.value(a.s0), ub = a.value(a.s1);
    const double va = b.value(b.s0), vb = b.value(b.s1);
    Rect uv_box{std::min(ua, ub), std::max(ua, ub), std::min(va, vb), std::max(va, vb)};
    auto E = ScalarField2::from_function(
        [a](double u, double) {
            const double d = a.slope(a.inverse(u));
            return 0.5 / (d * d);
        },
        uv_box);
    auto G = ScalarField2::from_function(
        [b](double, double v) {
            const double d = b.slope(b.inverse(v));
            return 1.0 + 0.5 / (d * d);
        },
        uv_box);
    return OrthogonalMetric(std::move(E), std::move(G));
}

// Grid of 3-space points X(u,v) = (H(u,v), H*(u,v), v); nodes where the
// plane inverse is out of range are masked out.
class EmbeddedSurface {
public:
    EmbeddedSurface(int nu, int nv, Rect uv_box)
        : nu_(nu), nv_(nv), uv_box_(uv_box),
          points_(static_cast<size_t>(nu) * nv), valid_(static_cast<size_t>(nu) * nv, 0) {
        if (nu < 1 || nv < 1) throw std::invalid_argument("EmbeddedSurface: empty grid");
    }

    int nu() const { return nu_; }
    int nv() const { return nv_; }
    const Rect& uv_box() const { return uv_box_; }
    double du() const { return nu_ > 1 ? uv_box_.width() / (nu_ - 1) : 0.0; }
    double dv() const { return nv_ > 1 ? uv_box_.height() / (nv_ - 1) : 0.0; }
    double uat(int i) const { return nu_ > 1 ? uv_box_.x0 + i * du() : uv_box_.x0; }
    double vat(int j) const { return nv_ > 1 ? uv_box_.y0 + j * dv() : uv_box_.y0; }

    const Vec3& point(int i, int j) const { return points_[index(i, j)]; }
    Vec3& point(int i, int j) { return points_[index(i, j)]; }
    bool node_valid(int i, int j) const { return valid_[index(i, j)] != 0; }
    void set_valid(int i, int j, bool v) { valid_[index(i, j)] = v ? 1 : 0; }
    int hole_count() const {
        int n = 0;
        for (auto v : valid_) n += (v == 0);
        return n;
    }

private:
    size_t index(int i, int j) const { return static_cast<size_t>(j) * nu_ + i; }

    int nu_, nv_;
    Rect uv_box_;
    std::vector<Vec3> points_;
    std::vector<uint8_t> valid_;
};

inline EmbeddedSurface build_surface(const InitialData1D& a, const InitialData1D& b, int nu,
                                     int nv, Rect uv_box) {
    EmbeddedSurface surf(nu, nv, uv_box);
    for (int j = 0; j < nv; ++j) {
        for (int i = 0; i < nu; ++i) {
            const double u = surf.uat(i), v = surf.vat(j);
            try {
                const Vec2 xy = invert_plane(a, b, {u, v});
                surf.point(i, j) = {xy.x, xy.y, v};
                surf.set_valid(i, j, true);
            } catch (const domain_error&) {
                surf.point(i, j) = {std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(), v};
            }
        }
    }
    return surf;
}

enum class MeshFormat { Obj, Csv };

// OBJ: vertices in grid-major order (u fastest) and quad cells split into
// two triangles, 1-based indices; faces touching a masked node are
// dropped.  CSV: "u,v,x,y,z" rows in the same order.  All numbers use
// shortest round-trip decimal formatting.
inline void export_mesh(const EmbeddedSurface& surf, const std::string& path, MeshFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_mesh: cannot open '" + path + "'");
    const int nu = surf.nu(), nv = surf.nv();
    if (format == MeshFormat::Obj) {
        for (int j = 0; j < nv; ++j)
            for (int i = 0; i < nu; ++i) {
                const Vec3& p = surf.point(i, j);
                out << "v " << format_double(p.x) << ' ' << format_double(p.y) << ' '
                    << format_double(p.z) << '\n';
            }
        auto id = [nu](int i, int j) { return j * nu + i + 1; };
        for (int j = 0; j + 1 < nv; ++j)
            for (int i = 0; i + 1 < nu; ++i) {
                if (!surf.node_valid(i, j) || !surf.node_valid(i + 1, j) ||
                    !surf.node_valid(i, j + 1) || !surf.node_valid(i + 1, j + 1))
                    continue;
                out << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
                out << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
            }
    } else {
        out << "u,v,x,y,z\n";
        for (int j = 0; j < nv; ++j)
            for (int i = 0; i < nu; ++i) {
                const Vec3& p = surf.point(i, j);
                out << format_double(surf.uat(i)) << ',' << format_double(surf.vat(j)) << ','
                    << format_double(p.x) << ',' << format_double(p.y) << ','
                    << format_double(p.z) << '\n';
            }
    }
    if (!out.good()) throw std::runtime_error("export_mesh: write failure on '" + path + "'");
}

} // namespace isoembed
