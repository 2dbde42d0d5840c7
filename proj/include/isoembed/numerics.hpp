#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace isoembed {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    double norm() const { return std::hypot(x, y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double k) const { return {x * k, y * k, z * k}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

// Row-major 2x2 matrix.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    double det() const { return a11 * a22 - a12 * a21; }

    // Solve M * s = r by Cramer's rule; caller checks det.
    Vec2 solve(Vec2 r) const {
        const double d = det();
        return {(r.x * a22 - a12 * r.y) / d, (a11 * r.y - r.x * a21) / d};
    }
};

// Axis-aligned parameter rectangle [x0,x1] x [y0,y1].
struct Rect {
    double x0 = 0.0, x1 = 1.0;
    double y0 = 0.0, y1 = 1.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    bool contains(Vec2 p, double pad = 0.0) const {
        return p.x >= x0 - pad && p.x <= x1 + pad && p.y >= y0 - pad && p.y <= y1 + pad;
    }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool degenerate() const { return !(x1 > x0) || !(y1 > y0); }
};

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

// Shortest round-trip decimal formatting (used for all CSV/OBJ output so
// that identical runs produce identical bytes).
inline std::string format_double(double v) {
    std::array<char, 40> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

// Uniform grid of doubles over a Rect, row-major with x fastest.
class GridField {
public:
    GridField() = default;
    GridField(int nx, int ny, Rect domain)
        : nx_(nx), ny_(ny), domain_(domain), data_(static_cast<size_t>(nx) * ny, 0.0) {
        if (nx < 2 || ny < 2) throw std::invalid_argument("GridField: need at least 2x2 nodes");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    const Rect& domain() const { return domain_; }
    double dx() const { return domain_.width() / (nx_ - 1); }
    double dy() const { return domain_.height() / (ny_ - 1); }
    double xat(int i) const { return domain_.x0 + i * dx(); }
    double yat(int j) const { return domain_.y0 + j * dy(); }

    double& at(int i, int j) { return data_[static_cast<size_t>(j) * nx_ + i]; }
    double at(int i, int j) const { return data_[static_cast<size_t>(j) * nx_ + i]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double bilinear(Vec2 p) const {
        auto [i, j, fx, fy] = locate(p);
        const double v00 = at(i, j), v10 = at(i + 1, j);
        const double v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
        return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
    }

    // Catmull-Rom bicubic.  Stencil nodes past the boundary are ghosted by
    // quadratic extrapolation, which keeps the interpolant C^1 and exact
    // on quadratic data right up to the edge (plain clamping is not even
    // linear-exact in the first cell).
    double bicubic(Vec2 p) const {
        auto [i, j, fx, fy] = locate(p);
        double col[4];
        for (int m = 0; m < 4; ++m) {
            const int jj = j - 1 + m;
            double row[4];
            for (int n = 0; n < 4; ++n) row[n] = node_or_ghost(i - 1 + n, jj);
            col[m] = catmull_rom(row, fx);
        }
        return catmull_rom(col, fy);
    }

private:
    struct Loc { int i, j; double fx, fy; };
    Loc locate(Vec2 p) const {
        double sx = (p.x - domain_.x0) / dx();
        double sy = (p.y - domain_.y0) / dy();
        int i = std::clamp(static_cast<int>(std::floor(sx)), 0, nx_ - 2);
        int j = std::clamp(static_cast<int>(std::floor(sy)), 0, ny_ - 2);
        return {i, j, sx - i, sy - j};
    }

    double axis_node_or_ghost_x(int i, int j) const {
        if (i >= 0 && i < nx_) return at(i, j);
        if (nx_ < 3) return at(std::clamp(i, 0, nx_ - 1), j);
        if (i < 0) return 3 * at(0, j) - 3 * at(1, j) + at(2, j);
        return 3 * at(nx_ - 1, j) - 3 * at(nx_ - 2, j) + at(nx_ - 3, j);
    }
    double node_or_ghost(int i, int j) const {
        if (j >= 0 && j < ny_) return axis_node_or_ghost_x(i, j);
        if (ny_ < 3) return axis_node_or_ghost_x(i, std::clamp(j, 0, ny_ - 1));
        if (j < 0)
            return 3 * axis_node_or_ghost_x(i, 0) - 3 * axis_node_or_ghost_x(i, 1) +
                   axis_node_or_ghost_x(i, 2);
        return 3 * axis_node_or_ghost_x(i, ny_ - 1) - 3 * axis_node_or_ghost_x(i, ny_ - 2) +
               axis_node_or_ghost_x(i, ny_ - 3);
    }
    static double catmull_rom(const double v[4], double t) {
        return v[1] + 0.5 * t * (v[2] - v[0] +
               t * (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3] +
               t * (3 * (v[1] - v[2]) + v[3] - v[0])));
    }

    int nx_ = 0, ny_ = 0;
    Rect domain_{};
    std::vector<double> data_;
};

// Deterministic parallel loop: each index writes its own slot, so the
// result does not depend on the thread count.
inline void parallel_for(int n, const std::function<void(int)>& body) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw <= 1 || n < 16) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int nthreads = static_cast<int>(std::min<unsigned>(hw, 8));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (int i = t; i < n; i += nthreads) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace isoembed
