#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hj/hopf.hpp"
#include "hj/parallel.hpp"
#include "hj/types.hpp"

namespace hj {

/// A straight characteristic line x(t) = y + t H_p(sigma_y(y)) with constant
/// momentum p = sigma_y(y).
struct Characteristic {
    Point anchor_y;  // emanation point at t = 0
    Point momentum;  // p = sigma_y(y)
    Point velocity;  // H_p(p)
    double v0 = 0.0; // sigma(y)

    Point position(double t) const {
        Point x(anchor_y.size());
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = anchor_y[d] + t * velocity[d];
        return x;
    }
};

enum class CurveType { TypeI, TypeII };

inline const char* curve_type_name(CurveType t) { return t == CurveType::TypeI ? "I" : "II"; }

struct TypeTag {
    CurveType tag = CurveType::TypeII;
    double t0 = 0.0;
    Point x0;
    Point witness_q;  // the tested momentum
};

struct CharOptions {
    int scan_nodes = 4097;
    double residual_tol = 1e-10;      // bisection acceptance
    double dedupe_tol = 1e-6;         // root deduplication
    double tangency_accept = 1e-8;    // |r| threshold for no-sign-change roots
    double window_pad = 1.0;          // window half-width = (t0 + pad) * max_speed
    double position_tol_rel = 1e-6;   // classify precondition
    std::optional<Box> window;        // overrides the default search window
};

/// sup |H_p| over a dense sample of the momentum ball B'(0, M); the speed
/// bound behind search windows and the singularity step size.
inline double speed_bound(const ProblemSpec& spec, double m, int nodes = 4097) {
    double s = 0.0;
    if (spec.dim == 1) {
        Point p(1);
        for (double v : linspace(-m, m, nodes)) {
            p[0] = v;
            s = std::max(s, std::fabs(grad_h(spec, p)[0]));
        }
        return s;
    }
    const int per_axis = std::max(9, static_cast<int>(std::pow(nodes, 1.0 / spec.dim)));
    std::vector<double> axis = linspace(-m, m, per_axis);
    Point p(static_cast<std::size_t>(spec.dim));
    std::vector<int> idx(static_cast<std::size_t>(spec.dim), 0);
    for (;;) {
        for (int d = 0; d < spec.dim; ++d)
            p[static_cast<std::size_t>(d)] = axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
        s = std::max(s, norm(grad_h(spec, p)));
        int d = 0;
        while (d < spec.dim && ++idx[static_cast<std::size_t>(d)] == per_axis) {
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == spec.dim) break;
    }
    return s;
}

/// The characteristic emanating from y: momentum sigma_y(y), velocity
/// H_p(sigma_y(y)), initial value sigma(y).
inline Characteristic characteristic_from_anchor(const ProblemSpec& spec, const Point& y) {
    Characteristic c;
    c.anchor_y = y;
    c.momentum = grad_sigma(spec, y);
    c.velocity = grad_h(spec, c.momentum);
    c.v0 = spec.initial(y);
    return c;
}

/// Finds every y (up to search resolution) whose characteristic reaches x0 at
/// time t0, i.e. the roots of r(y) = y + t0 H_p(sigma_y(y)) - x0: dense scan
/// plus bisection per sign change, with local |r|-minimization for tangential
/// roots. The returned anchors are the set l*(t0, x0).
inline std::vector<Characteristic> through_point(const ProblemSpec& spec, const ConjugateView& view,
                                                 double t0, const Point& x0,
                                                 const CharOptions& copts = {}) {
    if (t0 <= 0.0 || t0 >= spec.horizon)
        throw DomainError("through_point requires t0 in (0, T); got t0 = " + format_double(t0));
    if (spec.dim != 1 && spec.dim != 2)
        throw ConfigurationError("through_point supports dim 1 and 2");

    const double speed = speed_bound(spec, view.domain_radius);

    if (spec.dim == 1) {
        double lo, hi;
        if (copts.window) {
            lo = copts.window->lo[0];
            hi = copts.window->hi[0];
        } else {
            double w = (t0 + copts.window_pad) * speed;
            w = std::max(w, 1e-2 * (1.0 + std::fabs(x0[0])));
            lo = x0[0] - w;
            hi = x0[0] + w;
        }
        Point y(1);
        auto residual = [&](double yv) {
            y[0] = yv;
            Point p = grad_sigma(spec, y);
            Point v = grad_h(spec, p);
            return yv + t0 * v[0] - x0[0];
        };
        const std::vector<double> grid = linspace(lo, hi, copts.scan_nodes);
        std::vector<double> r(grid.size());
        parallel_for(
            grid.size(),
            [&](std::size_t i) {
                Point yy(1);
                yy[0] = grid[i];
                const Point v = grad_h(spec, grad_sigma(spec, yy));
                r[i] = grid[i] + t0 * v[0] - x0[0];
            },
            0);

        std::vector<double> roots;
        const double scale = 1.0 + std::fabs(x0[0]) + std::fabs(hi - lo);
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            if (r[i] == 0.0) {
                roots.push_back(grid[i]);
                continue;
            }
            if (r[i] * r[i + 1] < 0.0) {
                double a = grid[i], b = grid[i + 1];
                double ra = r[i];
                for (int iter = 0; iter < 200 && b - a > 1e-15 * scale; ++iter) {
                    const double mid = 0.5 * (a + b);
                    const double rm = residual(mid);
                    if (rm == 0.0) {
                        a = b = mid;
                        break;
                    }
                    if (ra * rm < 0.0) {
                        b = mid;
                    } else {
                        a = mid;
                        ra = rm;
                    }
                }
                roots.push_back(0.5 * (a + b));
            }
        }
        if (!r.empty() && r.back() == 0.0) roots.push_back(grid.back());

        // Tangential roots: |r| local minima without an adjacent sign change.
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double ai = std::fabs(r[i]);
            if (ai > std::fabs(r[i - 1]) || ai > std::fabs(r[i + 1])) continue;
            if (r[i - 1] * r[i] < 0.0 || r[i] * r[i + 1] < 0.0 || r[i] == 0.0) continue;
            auto neg_abs = [&](double yv) { return -std::fabs(residual(yv)); };
            auto best = hj::detail::golden_max(neg_abs, grid[i - 1], grid[i + 1], 1e-13 * scale);
            if (-best.second <= copts.tangency_accept * scale) roots.push_back(best.first);
        }

        std::sort(roots.begin(), roots.end());
        std::vector<double> unique_roots;
        for (double root : roots) {
            if (unique_roots.empty() || root - unique_roots.back() > copts.dedupe_tol)
                unique_roots.push_back(root);
        }
        if (unique_roots.empty())
            throw SearchWindowError(
                "through_point found no characteristics; l* is nonempty, so the window [" +
                format_double(lo) + ", " + format_double(hi) + "] or resolution is inadequate");

        std::vector<Characteristic> out;
        for (double root : unique_roots) out.push_back(characteristic_from_anchor(spec, point1(root)));
        return out;
    }

    // dim == 2: residual-norm local minima over a product grid, refined by
    // coordinate descent. Desk-scale support for property tests.
    double w = std::max((t0 + copts.window_pad) * speed, 1e-2 * (1.0 + norm(x0)));
    Box window = copts.window ? *copts.window
                              : Box{Point{x0[0] - w, x0[1] - w}, Point{x0[0] + w, x0[1] + w}};
    const int n = std::max(33, copts.scan_nodes / 64);
    std::vector<double> ax = linspace(window.lo[0], window.hi[0], n);
    std::vector<double> ay = linspace(window.lo[1], window.hi[1], n);
    auto res_norm = [&](const Point& yy) {
        Point p = grad_sigma(spec, yy);
        Point v = grad_h(spec, p);
        double s = 0.0;
        for (std::size_t d = 0; d < 2; ++d) {
            const double r = yy[d] + t0 * v[d] - x0[d];
            s += r * r;
        }
        return std::sqrt(s);
    };
    std::vector<std::vector<double>> rn(ax.size(), std::vector<double>(ay.size()));
    for (std::size_t i = 0; i < ax.size(); ++i)
        for (std::size_t j = 0; j < ay.size(); ++j) rn[i][j] = res_norm(Point{ax[i], ay[j]});
    const double scale = 1.0 + norm(x0);
    std::vector<Point> roots;
    for (std::size_t i = 1; i + 1 < ax.size(); ++i) {
        for (std::size_t j = 1; j + 1 < ay.size(); ++j) {
            const double v = rn[i][j];
            if (v > rn[i - 1][j] || v > rn[i + 1][j] || v > rn[i][j - 1] || v > rn[i][j + 1])
                continue;
            Point cur{ax[i], ay[j]};
            const double step0 = std::max(ax[1] - ax[0], ay[1] - ay[0]);
            for (int sweep = 0; sweep < 60; ++sweep) {
                bool improved = false;
                for (int d = 0; d < 2; ++d) {
                    auto slice = [&](double yv) {
                        Point probe = cur;
                        probe[static_cast<std::size_t>(d)] = yv;
                        return -res_norm(probe);
                    };
                    auto best = hj::detail::golden_max(
                        slice, cur[static_cast<std::size_t>(d)] - step0,
                        cur[static_cast<std::size_t>(d)] + step0, 1e-13 * scale);
                    if (-best.second < res_norm(cur)) {
                        cur[static_cast<std::size_t>(d)] = best.first;
                        improved = true;
                    }
                }
                if (!improved) break;
            }
            if (res_norm(cur) <= std::max(copts.residual_tol, copts.tangency_accept) * scale)
                roots.push_back(cur);
        }
    }
    std::vector<Point> unique_roots;
    for (const auto& root : roots) {
        bool dup = false;
        for (const auto& u : unique_roots)
            if (dist(root, u) <= copts.dedupe_tol) dup = true;
        if (!dup) unique_roots.push_back(root);
    }
    if (unique_roots.empty())
        throw SearchWindowError("through_point found no characteristics; window or resolution is inadequate");
    std::vector<Characteristic> out;
    for (const auto& root : unique_roots) out.push_back(characteristic_from_anchor(spec, root));
    return out;
}

/// Type (I) iff the curve's momentum sigma_y(y) lies within cluster_tol of a
/// representative of l(t0, x0); type (II) otherwise.
inline TypeTag classify(const ProblemSpec& spec, const ConjugateView& view,
                        const Characteristic& c, double t0, const Point& x0,
                        const CharOptions& copts = {}, const SolveOptions& sopts = {}) {
    const double miss = dist(c.position(t0), x0);
    if (miss > copts.position_tol_rel * (1.0 + norm(x0)))
        throw PreconditionError("classify: characteristic misses (t0, x0) by " +
                                format_double(miss));
    MaximizerSet ms = evaluate(spec, view, t0, x0, sopts);
    TypeTag tag;
    tag.t0 = t0;
    tag.x0 = x0;
    tag.witness_q = c.momentum;
    tag.tag = CurveType::TypeII;
    for (const auto& rep : ms.representatives) {
        if (dist(rep, c.momentum) <= ms.cluster_tol) {
            tag.tag = CurveType::TypeI;
            break;
        }
    }
    return tag;
}

// ---------------------------------------------------------------------------
// Persistence along type (I) curves

struct PersistenceSample {
    double t = 0.0;
    Point x;
    bool momentum_member = false;  // p0 in l(t, x)
    bool singleton = false;        // l(t, x) singleton for t < t0
    bool subset = false;           // l(t, x) inside l(t0, x0)
};

struct PersistenceReport {
    bool pass = false;
    std::vector<PersistenceSample> samples;
    std::string first_violation;
};

/// Checks the three type-(I) consequences along the curve below t0:
/// membership of p0, singleton maximizer sets, and inclusion in l(t0, x0).
inline PersistenceReport persistence_check(const ProblemSpec& spec, const ConjugateView& view,
                                           const Characteristic& c, double t0, int steps,
                                           const SolveOptions& sopts = {}) {
    PersistenceReport report;
    report.pass = true;
    const MaximizerSet at_top = evaluate(spec, view, t0, c.position(t0), sopts);
    const double tol = at_top.cluster_tol;
    for (int k = 1; k <= steps; ++k) {
        const double t = t0 * static_cast<double>(k) / static_cast<double>(steps + 1);
        const Point x = c.position(t);
        MaximizerSet ms = evaluate(spec, view, t, x, sopts);
        PersistenceSample row;
        row.t = t;
        row.x = x;
        row.singleton = ms.singleton;
        row.momentum_member = false;
        for (const auto& rep : ms.representatives)
            if (dist(rep, c.momentum) <= tol) row.momentum_member = true;
        row.subset = true;
        for (const auto& rep : ms.representatives) {
            bool found = false;
            for (const auto& top : at_top.representatives)
                if (dist(rep, top) <= tol) found = true;
            if (!found) row.subset = false;
        }
        if (report.pass && !(row.momentum_member && row.singleton && row.subset)) {
            report.pass = false;
            report.first_violation = "t=" + format_double(t) + " x=" + format_point(x) +
                                     (row.momentum_member ? "" : " p0-not-member") +
                                     (row.singleton ? "" : " not-singleton") +
                                     (row.subset ? "" : " not-subset");
        }
        report.samples.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Reachable gradients

struct GradientPair {
    double p = 0.0;  // -H(q)
    Point q;
};

struct ReachableGradients {
    std::vector<GradientPair> pairs;
    bool cross_checked = false;
    bool samples_matched = true;   // every sampled gradient near some pair
    bool pairs_approached = true;  // every pair near some sampled gradient
    double worst_sample_mismatch = 0.0;
    int samples_used = 0;
};

/// D*u(t0, x0) = {(-H(q), q) : q in l(t0, x0)}. With cross_validate set, the
/// pairs are checked against central-difference gradients of u at nearby
/// regular points; mismatches are flagged in the report, not fatal.
inline ReachableGradients reachable_gradients(const ProblemSpec& spec, const ConjugateView& view,
                                              double t0, const Point& x0,
                                              const SolveOptions& sopts = {},
                                              bool cross_validate = false,
                                              double sample_radius = 5e-3, double fd_h = 1e-4,
                                              double match_tol = 1e-2) {
    if (t0 <= 0.0 || t0 >= spec.horizon)
        throw DomainError("reachable_gradients requires t0 in (0, T)");
    MaximizerSet ms = evaluate(spec, view, t0, x0, sopts);
    ReachableGradients out;
    for (const auto& q : ms.representatives) {
        const double h = spec.hamiltonian(q);
        detail::check_finite(h, "H", q);
        out.pairs.push_back({-h, q});
    }
    if (!cross_validate || spec.dim != 1) return out;

    out.cross_checked = true;
    std::vector<double> pair_hit(out.pairs.size(), kInfinity);
    const int n_samples = 20;
    for (int j = 0; j < n_samples; ++j) {
        const double angle = 2.0 * 3.14159265358979323846 * (j + 0.5) / n_samples;
        const double t = t0 + sample_radius * std::cos(angle);
        const Point x = point1(x0[0] + sample_radius * std::sin(angle));
        if (t - 2 * fd_h <= 0.0 || t + 2 * fd_h >= spec.horizon) continue;
        // Only regular points with a stencil clear of the singular set count.
        bool clean = evaluate(spec, view, t, x, sopts).singleton;
        for (int s = -1; clean && s <= 1; s += 2) {
            clean = clean && evaluate(spec, view, t + s * fd_h, x, sopts).singleton &&
                    evaluate(spec, view, t, point1(x[0] + s * fd_h), sopts).singleton;
        }
        if (!clean) continue;
        auto grad = u_fd_gradient(spec, view, t, x, fd_h, sopts);
        ++out.samples_used;
        double best = kInfinity;
        for (std::size_t i = 0; i < out.pairs.size(); ++i) {
            const double dp = grad.first - out.pairs[i].p;
            const double dq = grad.second[0] - out.pairs[i].q[0];
            const double d = std::sqrt(dp * dp + dq * dq);
            best = std::min(best, d);
            pair_hit[i] = std::min(pair_hit[i], d);
        }
        out.worst_sample_mismatch = std::max(out.worst_sample_mismatch, best);
        if (best > match_tol) out.samples_matched = false;
    }
    for (double hit : pair_hit)
        if (hit > match_tol) out.pairs_approached = false;
    return out;
}

}  // namespace hj
