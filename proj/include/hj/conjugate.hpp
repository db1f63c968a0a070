#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "hj/errors.hpp"
#include "hj/problem.hpp"
#include "hj/rng.hpp"
#include "hj/types.hpp"

namespace hj {

enum class ConjugateMode { analytic, numeric };

/// Numeric conjugate data on a uniform slope grid. `dom_lo/dom_hi` is the
/// detected effective domain: a query slope outside the input's secant-slope
/// range would put the sup on the window boundary, which means the true
/// conjugate there is +inf (sigma Lipschitz keeps the real domain strictly
/// inside the window's slope range).
struct ConjugateGrid1D {
    std::vector<double> nodes;   // q grid, uniform over [-radius, radius]
    std::vector<double> values;  // sigma*(q) per node
    double radius = 0.0;
    double dom_lo = 0.0;
    double dom_hi = 0.0;
    // Supporting points of the convex hull of the input samples, kept for
    // subgradient queries (argmax x per slope).
    std::vector<double> hull_x;
    std::vector<double> hull_f;
};

struct ConjugateGrid2D {
    std::vector<double> nodes_x, nodes_y;  // q grids per axis
    std::vector<double> values;            // row-major [iy * nx + ix]
    double radius = 0.0;
};

/// Queryable representation of sigma*: values (+inf outside the effective
/// domain), the domain radius M with dom sigma* inside B'(0, M), and for
/// numeric mode the transform grid itself.
struct ConjugateView {
    int dim = 1;
    ConjugateMode mode = ConjugateMode::numeric;
    double domain_radius = 0.0;  // M
    ScalarFn value;              // q -> sigma*(q), +inf sentinel outside dom
    std::function<SubgradientInterval(double)> analytic_subgrad;  // optional, 1-D
    std::shared_ptr<const ConjugateGrid1D> grid;
    std::shared_ptr<const ConjugateGrid2D> grid2;
};

namespace detail {

/// Lower convex hull of samples (x_i, f_i), x ascending. Returns indices.
inline std::vector<std::size_t> lower_hull(const std::vector<double>& x,
                                           const std::vector<double>& f) {
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < x.size(); ++i) {
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2];
            const std::size_t b = hull[hull.size() - 1];
            // Pop b when it lies on or above chord a->i.
            const double cross = (x[b] - x[a]) * (f[i] - f[a]) - (x[i] - x[a]) * (f[b] - f[a]);
            if (cross > 0.0) break;
            hull.pop_back();
        }
        hull.push_back(i);
    }
    return hull;
}

/// Linear-time Legendre transform in 1-D: conjugate of the convex envelope of
/// the samples, evaluated on an ascending slope grid by merging the sorted
/// hull slopes with the sorted queries.
inline void llt_1d(const std::vector<double>& x, const std::vector<double>& f,
                   const std::vector<double>& q, std::vector<double>& out,
                   std::vector<double>* hull_x = nullptr, std::vector<double>* hull_f = nullptr) {
    const auto hull = lower_hull(x, f);
    out.assign(q.size(), 0.0);
    std::size_t j = 0;  // hull vertex pointer
    for (std::size_t k = 0; k < q.size(); ++k) {
        while (j + 1 < hull.size()) {
            const std::size_t a = hull[j], b = hull[j + 1];
            const double slope = (f[b] - f[a]) / (x[b] - x[a]);
            if (slope < q[k]) {
                ++j;
            } else {
                break;
            }
        }
        out[k] = q[k] * x[hull[j]] - f[hull[j]];
    }
    if (hull_x && hull_f) {
        hull_x->clear();
        hull_f->clear();
        for (std::size_t idx : hull) {
            hull_x->push_back(x[idx]);
            hull_f->push_back(f[idx]);
        }
    }
}

inline double interp_grid(const ConjugateGrid1D& g, double q) {
    if (q < g.nodes.front() || q > g.nodes.back()) return kInfinity;
    if (q < g.dom_lo || q > g.dom_hi) return kInfinity;
    const double step = (g.nodes.back() - g.nodes.front()) /
                        static_cast<double>(g.nodes.size() - 1);
    const double s = (q - g.nodes.front()) / step;
    const std::size_t i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(s))),
                                   g.nodes.size() - 2);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * g.values[i] + w * g.values[i + 1];
}

}  // namespace detail

/// Numeric Fenchel conjugate of f over the window B'(0, radius_in), tabulated
/// on a slope grid over B'(0, radius_out). 1-D uses the linear-time sorted
/// slope transform; dim 2 factors per axis when f is separable and falls back
/// to a brute-force double loop otherwise.
inline ConjugateView conjugate_numeric(const ScalarFn& f, int dim, double radius_in,
                                       double radius_out, int nodes) {
    if (nodes < 3) throw PreconditionError("conjugate_numeric requires nodes >= 3 per axis");
    ConjugateView view;
    view.dim = dim;
    view.mode = ConjugateMode::numeric;
    view.domain_radius = radius_out;

    if (dim == 1) {
        auto grid = std::make_shared<ConjugateGrid1D>();
        grid->radius = radius_out;
        grid->nodes = linspace(-radius_out, radius_out, nodes);
        std::vector<double> x = linspace(-radius_in, radius_in, nodes);
        std::vector<double> fx(x.size());
        Point probe(1);
        for (std::size_t i = 0; i < x.size(); ++i) {
            probe[0] = x[i];
            fx[i] = f(probe);
            detail::check_finite(fx[i], "conjugate input f", probe);
            if (fx[i] == kInfinity) {
                throw EvaluationError("conjugate input f is infinite at x = " +
                                      format_double(x[i]));
            }
        }
        detail::llt_1d(x, fx, grid->nodes, grid->values, &grid->hull_x, &grid->hull_f);
        // Effective domain from the hull's extreme secant slopes.
        if (grid->hull_x.size() >= 2) {
            const std::size_t m = grid->hull_x.size();
            const double s_lo =
                (grid->hull_f[1] - grid->hull_f[0]) / (grid->hull_x[1] - grid->hull_x[0]);
            const double s_hi = (grid->hull_f[m - 1] - grid->hull_f[m - 2]) /
                                (grid->hull_x[m - 1] - grid->hull_x[m - 2]);
            const double snap = 1e-9 * (1.0 + std::max(std::fabs(s_lo), std::fabs(s_hi)));
            grid->dom_lo = s_lo - snap;
            grid->dom_hi = s_hi + snap;
        } else {
            grid->dom_lo = -kInfinity;
            grid->dom_hi = kInfinity;
        }
        view.grid = grid;
        view.value = [grid](const Point& q) { return detail::interp_grid(*grid, q[0]); };
        return view;
    }
    if (dim != 2) throw ConfigurationError("conjugate_numeric supports dim 1 and 2 only");

    // Separability probe: f(x1, x2) == f(x1, 0) + f(0, x2) - f(0, 0).
    bool separable = true;
    {
        Point p(2);
        auto at = [&](double a, double b) {
            p[0] = a;
            p[1] = b;
            return f(p);
        };
        const double f00 = at(0.0, 0.0);
        for (double a : {-radius_in, -0.37 * radius_in, 0.61 * radius_in, radius_in}) {
            for (double b : {-radius_in, 0.41 * radius_in, radius_in}) {
                const double lhs = at(a, b);
                const double rhs = at(a, 0.0) + at(0.0, b) - f00;
                if (std::fabs(lhs - rhs) > 1e-9 * (1.0 + std::fabs(lhs))) separable = false;
            }
        }
    }

    if (separable) {
        Point p(2);
        const double f00 = f(Point{0.0, 0.0});
        ScalarFn f1 = [f, f00](const Point& x) { return f(Point{x[0], 0.0}) - 0.5 * f00; };
        ScalarFn f2 = [f, f00](const Point& x) { return f(Point{0.0, x[0]}) - 0.5 * f00; };
        ConjugateView v1 = conjugate_numeric(f1, 1, radius_in, radius_out, nodes);
        ConjugateView v2 = conjugate_numeric(f2, 1, radius_in, radius_out, nodes);
        view.value = [v1, v2](const Point& q) {
            const double a = v1.value(Point{q[0]});
            const double b = v2.value(Point{q[1]});
            if (a == kInfinity || b == kInfinity) return kInfinity;
            return a + b;
        };
        return view;
    }

    // Brute force with the early break along each row: x -> <x,q> - f(x) is
    // concave for convex f, so a decreasing run ends the row scan.
    auto grid2 = std::make_shared<ConjugateGrid2D>();
    grid2->radius = radius_out;
    grid2->nodes_x = linspace(-radius_out, radius_out, nodes);
    grid2->nodes_y = linspace(-radius_out, radius_out, nodes);
    std::vector<double> xs = linspace(-radius_in, radius_in, nodes);
    std::vector<std::vector<double>> fv(xs.size(), std::vector<double>(xs.size()));
    Point probe(2);
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) {
            probe[0] = xs[i];
            probe[1] = xs[j];
            fv[i][j] = f(probe);
            detail::check_finite(fv[i][j], "conjugate input f", probe);
        }
    grid2->values.resize(grid2->nodes_x.size() * grid2->nodes_y.size());
    for (std::size_t qy = 0; qy < grid2->nodes_y.size(); ++qy) {
        for (std::size_t qx = 0; qx < grid2->nodes_x.size(); ++qx) {
            double best = -kInfinity;
            for (std::size_t j = 0; j < xs.size(); ++j) {
                double row_best = -kInfinity;
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    const double v =
                        xs[i] * grid2->nodes_x[qx] + xs[j] * grid2->nodes_y[qy] - fv[i][j];
                    if (v < row_best) break;
                    row_best = v;
                }
                best = std::max(best, row_best);
            }
            grid2->values[qy * grid2->nodes_x.size() + qx] = best;
        }
    }
    view.grid2 = grid2;
    view.value = [grid2](const Point& q) {
        const auto& nx = grid2->nodes_x;
        const auto& ny = grid2->nodes_y;
        if (q[0] < nx.front() || q[0] > nx.back() || q[1] < ny.front() || q[1] > ny.back())
            return kInfinity;
        auto locate = [](const std::vector<double>& n, double v, double& w) {
            const double step = (n.back() - n.front()) / static_cast<double>(n.size() - 1);
            const double s = (v - n.front()) / step;
            const std::size_t i =
                std::min(static_cast<std::size_t>(std::max(0.0, std::floor(s))), n.size() - 2);
            w = s - static_cast<double>(i);
            return i;
        };
        double wx = 0.0, wy = 0.0;
        const std::size_t ix = locate(nx, q[0], wx);
        const std::size_t iy = locate(ny, q[1], wy);
        const std::size_t n = nx.size();
        const double v00 = grid2->values[iy * n + ix];
        const double v10 = grid2->values[iy * n + ix + 1];
        const double v01 = grid2->values[(iy + 1) * n + ix];
        const double v11 = grid2->values[(iy + 1) * n + ix + 1];
        return (1 - wy) * ((1 - wx) * v00 + wx * v10) + wy * ((1 - wx) * v01 + wx * v11);
    };
    return view;
}

/// View over sigma* for a problem: analytic when the spec carries one, else
/// the numeric transform on a 4001-node grid with the input window extending
/// one unit past the Lipschitz bound.
inline ConjugateView make_view(const ProblemSpec& spec, int nodes = 4001) {
    if (spec.conjugate_value) {
        ConjugateView view;
        view.dim = spec.dim;
        view.mode = ConjugateMode::analytic;
        view.domain_radius = spec.lipschitz_bound;
        view.value = spec.conjugate_value;
        view.analytic_subgrad = spec.conjugate_subgradient;
        return view;
    }
    ConjugateView view = conjugate_numeric(spec.initial, spec.dim, spec.lipschitz_bound + 1.0,
                                           spec.lipschitz_bound, nodes);
    view.domain_radius = spec.lipschitz_bound;
    return view;
}

// ---------------------------------------------------------------------------
// Subdifferentials

/// Finite approximation of the subdifferential of sigma* at p0 (1-D):
/// analytic when available, otherwise one-sided difference quotients at
/// resolution `tol`. Rays at the domain boundary are clipped to
/// [-window, window] with the unbounded flags set.
inline SubgradientInterval subdifferential(const ConjugateView& view, const Point& p0,
                                           double tol, double window = 0.0) {
    if (view.dim != 1)
        throw ConfigurationError("subdifferential intervals are 1-D; use the inequality probe");
    const double p = p0[0];
    if (window <= 0.0) window = 8.0 * (1.0 + view.domain_radius);
    const double v0 = view.value(p0);
    if (v0 == kInfinity)
        throw DomainError("p0 = " + format_double(p) + " is outside dom sigma*");

    SubgradientInterval s;
    if (view.analytic_subgrad) {
        s = view.analytic_subgrad(p);
    } else {
        const double h = std::max(tol, 1e-7 * (1.0 + std::fabs(p)));
        const double v_plus = view.value(point1(p + h));
        const double v_minus = view.value(point1(p - h));
        if (v_minus == kInfinity) {
            s.unbounded_below = true;
            s.lo = 0.0;
        } else {
            s.lo = (v0 - v_minus) / h;
        }
        if (v_plus == kInfinity) {
            s.unbounded_above = true;
            s.hi = 0.0;
        } else {
            s.hi = (v_plus - v0) / h;
        }
        if (s.unbounded_below && !s.unbounded_above) s.lo = s.hi;
        if (s.unbounded_above && !s.unbounded_below) s.hi = s.lo;
    }
    if (s.unbounded_below) s.lo = -window;
    if (s.unbounded_above) s.hi = window;
    return s;
}

// ---------------------------------------------------------------------------
// Affine-segment probe

struct AffineProbeResult {
    bool affine = false;         // <y, p - p0> equals sigma*(p) - sigma*(p0)
    bool inconsistency = false;  // an interior point broke the affine identity
    double worst_gap = 0.0;      // largest interior violation seen
};

/// Tests whether sigma* is affine along [p0, p] with slope y in the sense of
/// the chord identity; when it is, the conclusion is re-verified at 8
/// interior points and any violation is reported as an inconsistency.
inline AffineProbeResult affine_segment_probe(const ConjugateView& view, const Point& p,
                                              const Point& p0, const Point& y, double tol) {
    const double vp = view.value(p);
    const double vp0 = view.value(p0);
    if (vp == kInfinity || vp0 == kInfinity)
        throw DomainError("affine_segment_probe: endpoint outside dom sigma*");

    // Precondition: y is a subgradient of sigma* at p0.
    if (view.dim == 1) {
        SubgradientInterval s = subdifferential(view, p0, tol);
        if (!s.contains(y[0], tol + 1e-6))
            throw PreconditionError("affine_segment_probe: y is not a subgradient at p0");
    } else {
        // n-D: sample the subgradient inequality around p0.
        for (double step : {0.25, 0.5, 1.0}) {
            Point z = p0;
            for (std::size_t d = 0; d < z.size(); ++d)
                z[d] += step * (p[d] - p0[d]);
            const double vz = view.value(z);
            if (vz == kInfinity) continue;
            if (vz - vp0 < dot(y, z) - dot(y, p0) - tol - 1e-6)
                throw PreconditionError("affine_segment_probe: y is not a subgradient at p0");
        }
    }

    AffineProbeResult out;
    Point diff(p.size());
    for (std::size_t d = 0; d < p.size(); ++d) diff[d] = p[d] - p0[d];
    out.affine = std::fabs(dot(y, diff) - (vp - vp0)) <= tol;
    if (!out.affine || dist(p, p0) == 0.0) return out;

    for (int k = 1; k <= 8; ++k) {
        const double lam = static_cast<double>(k) / 9.0;
        Point z(p.size());
        for (std::size_t d = 0; d < p.size(); ++d) z[d] = p0[d] + lam * diff[d];
        const double vz = view.value(z);
        const double predicted = dot(y, z) - dot(y, p0) + vp0;
        const double gap = std::fabs(vz - predicted);
        if (gap > tol) {
            out.inconsistency = true;
            out.worst_gap = std::max(out.worst_gap, gap);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convexity-constant duality

struct DualityReport {
    double worst_margin = kInfinity;  // min over pairs of gap - (mu/4)|a-b|^2
    int samples = 0;
    double mu = 0.0;
    double tol = 0.0;
    bool passed = false;  // worst_margin >= -tol
    bool pass(double t) const { return worst_margin >= -t; }
};

/// Samples the uniform-convexity inequality for sigma*:
///   sigma*(a) + sigma*(b) - 2 sigma*((a+b)/2) >= (mu/4) |a-b|^2
/// on random pairs inside dom sigma*, where 1/mu is the declared
/// semiconcavity constant of sigma. Report-only.
inline DualityReport constant_duality_check(const ProblemSpec& spec, const ConjugateView& view,
                                            double tol, int samples = 400,
                                            std::uint64_t seed = kDefaultSeed) {
    if (!spec.semiconcavity_sigma)
        throw ConfigurationError("constant_duality_check requires semiconcavity_sigma (1/mu)");
    const double mu = 1.0 / *spec.semiconcavity_sigma;
    DualityReport report;
    report.mu = mu;
    Rng rng(seed);
    const double m = view.domain_radius;
    Point a(static_cast<std::size_t>(view.dim)), b(a.size()), mid(a.size());
    int accepted = 0;
    int attempts = 0;
    while (accepted < samples && attempts < 50 * samples) {
        ++attempts;
        for (std::size_t d = 0; d < a.size(); ++d) {
            a[d] = rng.uniform(-m, m);
            b[d] = rng.uniform(-m, m);
            mid[d] = 0.5 * (a[d] + b[d]);
        }
        const double va = view.value(a), vb = view.value(b), vm = view.value(mid);
        if (va == kInfinity || vb == kInfinity || vm == kInfinity) continue;
        const double gap = va + vb - 2.0 * vm;
        const double d2 = dist(a, b) * dist(a, b);
        report.worst_margin = std::min(report.worst_margin, gap - 0.25 * mu * d2);
        ++accepted;
    }
    if (accepted == 0) {
        // Degenerate domain (e.g. a single slope): only coincident pairs
        // exist and the inequality holds with margin zero.
        report.worst_margin = 0.0;
    }
    report.samples = accepted;
    report.tol = tol;
    report.passed = report.pass(tol);
    return report;
}

}  // namespace hj
