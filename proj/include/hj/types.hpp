#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace hj {

/// Points and momenta live in R^n; the catalog is 1-D but the core contracts
/// are dimension-generic.
using Point = std::vector<double>;

using ScalarFn = std::function<double(const Point&)>;
using GradFn = std::function<Point(const Point&)>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline Point point1(double x) { return Point{x}; }

inline double norm(const Point& p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return std::sqrt(s);
}

inline double dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double dot(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Axis-aligned box window.
struct Box {
    Point lo, hi;
    int dim() const { return static_cast<int>(lo.size()); }
};

inline Box box1(double lo, double hi) { return Box{point1(lo), point1(hi)}; }

/// One-dimensional subgradient interval, possibly a clipped ray.
struct SubgradientInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool unbounded_below = false;
    bool unbounded_above = false;

    bool contains(double y, double tol) const {
        const double effective_lo = unbounded_below ? -kInfinity : lo - tol;
        const double effective_hi = unbounded_above ? kInfinity : hi + tol;
        return y >= effective_lo && y <= effective_hi;
    }
};

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = 0.5 * (lo + hi);
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    out.back() = hi;
    return out;
}

/// Symmetric grid over [center - radius, center + radius]; for odd n the
/// middle node is snapped to `center` bit-exactly, which keeps singular
/// traces pinned to the set they follow.
inline std::vector<double> centered_grid(double center, double radius, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    if (n == 1) {
        out[0] = center;
        return out;
    }
    const double step = 2.0 * radius / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = (center - radius) + step * i;
    if ((n - 1) % 2 == 0) out[static_cast<std::size_t>((n - 1) / 2)] = center;
    return out;
}

}  // namespace hj
