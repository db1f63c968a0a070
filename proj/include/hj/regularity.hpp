#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hj/characteristics.hpp"
#include "hj/hopf.hpp"
#include "hj/parallel.hpp"
#include "hj/rng.hpp"

namespace hj {

/// Documented local bound for the central-difference PDE residual at regular
/// points: |u_t + H(u_x)| <= kResidualSlopeBound * h + tol.
inline constexpr double kResidualSlopeBound = 10.0;

/// t* = min(T, mu / (2 gamma)): below this level the solution is C^1 when H
/// is gamma-semiconvex and sigma is (1/mu)-semiconcave.
inline double strip_bound(const ProblemSpec& spec) {
    if (!spec.semiconvexity_h || !spec.semiconcavity_sigma)
        throw ConfigurationError(
            "strip_bound requires declared semiconvexity_h (gamma) and semiconcavity_sigma (1/mu)");
    const double gamma = *spec.semiconvexity_h;
    const double mu = 1.0 / *spec.semiconcavity_sigma;
    if (gamma <= 0.0 || mu <= 0.0)
        throw ConfigurationError("strip_bound requires gamma > 0 and mu > 0");
    return std::min(spec.horizon, 0.5 * mu / gamma);
}

struct StripWitness {
    double t = 0.0;
    Point x;
};

struct ConditionResult {
    std::string name;
    double level = 0.0;
    bool pass = false;
};

struct StripReport {
    double theta_estimate = 0.0;                 // window-relative estimate of theta
    std::optional<double> theoretical_bound;     // mu / (2 gamma), clipped at T
    std::optional<StripWitness> witness;         // first non-singleton found
    bool no_witness_in_window = false;
    std::vector<ConditionResult> condition_results;
    Box x_window;
    int x_nodes = 0;
    int levels = 0;
    double level_resolution = 0.0;
};

namespace detail {

inline std::vector<Point> window_grid(const Box& window, int nodes_per_axis) {
    const int dim = window.dim();
    std::vector<std::vector<double>> axes;
    std::size_t total = 1;
    for (int d = 0; d < dim; ++d) {
        axes.push_back(linspace(window.lo[static_cast<std::size_t>(d)],
                                window.hi[static_cast<std::size_t>(d)], nodes_per_axis));
        total *= axes.back().size();
    }
    std::vector<Point> out;
    out.reserve(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
        Point x(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d)
            x[static_cast<std::size_t>(d)] =
                axes[static_cast<std::size_t>(d)][idx[static_cast<std::size_t>(d)]];
        out.push_back(std::move(x));
        int d = dim - 1;
        while (d >= 0 && ++idx[static_cast<std::size_t>(d)] == axes[static_cast<std::size_t>(d)].size()) {
            idx[static_cast<std::size_t>(d)] = 0;
            --d;
        }
        if (d < 0) break;
    }
    return out;
}

/// First grid x with a non-singleton maximizer set at level t, if any.
inline std::optional<Point> first_non_singleton(const ProblemSpec& spec, const ConjugateView& view,
                                                double t, const std::vector<Point>& grid,
                                                const SolveOptions& opts) {
    std::vector<char> bad(grid.size(), 0);
    parallel_for(
        grid.size(),
        [&](std::size_t i) { bad[i] = evaluate(spec, view, t, grid[i], opts).singleton ? 0 : 1; },
        opts.workers);
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (bad[i]) return grid[i];
    return std::nullopt;
}

}  // namespace detail

/// Bisection estimate of theta = sup{t : u(t, .) in C^1} on the sampled
/// window: a level passes iff every grid x has a singleton l(t, x). The
/// estimate is window-relative; report states window and resolution.
inline StripReport estimate_theta(const ProblemSpec& spec, const ConjugateView& view,
                                  const Box& x_window, int levels, int x_nodes = 201,
                                  const SolveOptions& opts = {}) {
    if (levels < 4) throw PreconditionError("estimate_theta requires levels >= 4");
    StripReport report;
    report.x_window = x_window;
    report.x_nodes = x_nodes;
    report.levels = levels;
    report.level_resolution = spec.horizon / std::pow(2.0, levels);
    if (spec.semiconvexity_h && spec.semiconcavity_sigma) {
        try {
            report.theoretical_bound = strip_bound(spec);
        } catch (const ConfigurationError&) {
        }
    }

    const std::vector<Point> grid = detail::window_grid(x_window, x_nodes);
    double lo = 0.0, hi = spec.horizon;
    std::optional<StripWitness> hi_witness;
    for (int iter = 0; iter < levels; ++iter) {
        const double mid = 0.5 * (lo + hi);
        auto bad = detail::first_non_singleton(spec, view, mid, grid, opts);
        if (bad) {
            hi = mid;
            hi_witness = StripWitness{mid, *bad};
        } else {
            lo = mid;
        }
    }
    if (!hi_witness) {
        report.theta_estimate = spec.horizon;
        report.no_witness_in_window = true;
    } else {
        report.theta_estimate = 0.5 * (lo + hi);
        report.witness = hi_witness;
    }
    return report;
}

/// 1-D: strict monotonicity of y -> x(t*, y) = y + t* H_p(sigma_y(y)) over
/// the sampled window. n-D: pairwise distinctness of images at resolution
/// tol (necessary evidence only).
inline bool injectivity_check(const ProblemSpec& spec, double t_star, const Box& y_window,
                              int nodes) {
    if (t_star <= 0.0 || t_star >= spec.horizon)
        throw DomainError("injectivity_check requires t_star in (0, T)");
    const std::vector<Point> grid = detail::window_grid(y_window, nodes);
    std::vector<Point> images(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point p = grad_sigma(spec, grid[i]);
        const Point v = grad_h(spec, p);
        Point x(grid[i].size());
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = grid[i][d] + t_star * v[d];
        images[i] = std::move(x);
    }
    if (spec.dim == 1) {
        double span = 0.0;
        for (const auto& x : images) span = std::max(span, std::fabs(x[0]));
        const double tol = 1e-9 * (1.0 + span);
        for (std::size_t i = 0; i + 1 < images.size(); ++i)
            if (images[i + 1][0] <= images[i][0] - tol) return false;
        return true;
    }
    const double tol = 1e-6;
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            if (dist(images[i], images[j]) <= tol) return false;
    return true;
}

/// True iff l(t*, x) is a singleton for every sampled x on the window.
inline bool plane_singleton_check(const ProblemSpec& spec, const ConjugateView& view,
                                  double t_star, const Box& x_window, int nodes,
                                  const SolveOptions& opts = {}) {
    const std::vector<Point> grid = detail::window_grid(x_window, nodes);
    return !detail::first_non_singleton(spec, view, t_star, grid, opts).has_value();
}

/// True iff every characteristic through (t*, x) is of type (I), for each
/// sampled x.
inline bool all_type_one_check(const ProblemSpec& spec, const ConjugateView& view, double t_star,
                               const Box& x_window, int nodes, const CharOptions& copts = {},
                               const SolveOptions& sopts = {}) {
    const std::vector<Point> grid = detail::window_grid(x_window, nodes);
    for (const auto& x : grid) {
        const auto curves = through_point(spec, view, t_star, x, copts);
        for (const auto& c : curves) {
            if (classify(spec, view, c, t_star, x, copts, sopts).tag != CurveType::TypeI)
                return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Crossing audit

struct Region {
    double t_lo = 0.0;
    double t_hi = 0.0;
    Box x_window;
};

struct CrossingPoint {
    double t = 0.0;
    Point x;
    int curve_count = 0;
};

struct CrossingReport {
    std::vector<CrossingPoint> crossings;
    int points_checked = 0;
    bool none() const { return crossings.empty(); }
};

/// Audits a region believed C^1: at sampled (t, x), through_point must return
/// exactly one curve; every multi-curve point is reported as a crossing.
inline CrossingReport crossing_check(const ProblemSpec& spec, const ConjugateView& view,
                                     const Region& region, int samples,
                                     const CharOptions& copts = {}) {
    CrossingReport report;
    const int nt = std::max(2, static_cast<int>(std::floor(std::sqrt(static_cast<double>(samples)))));
    const int nx = std::max(2, (samples + nt - 1) / nt);
    // Strictly interior t levels.
    for (int i = 0; i < nt; ++i) {
        const double t = region.t_lo + (region.t_hi - region.t_lo) *
                                           (static_cast<double>(i) + 0.5) / static_cast<double>(nt);
        if (t <= 0.0 || t >= spec.horizon) continue;
        for (const auto& x : detail::window_grid(region.x_window, nx)) {
            ++report.points_checked;
            const auto curves = through_point(spec, view, t, x, copts);
            if (curves.size() > 1)
                report.crossings.push_back({t, x, static_cast<int>(curves.size())});
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Viscosity audit

struct ViscosityRow {
    double t = 0.0;
    Point x;
    bool regular = true;
    double residual = 0.0;         // |u_t + H(u_x)| at regular points
    double min_margin = 0.0;       // min of p + H(q) over sampled co D*u at singular points
    double alpha = 0.0;            // max of p + H(q) over sampled co D*u
    bool within_bound = true;
    std::string note;
};

struct ViscosityReport {
    std::vector<ViscosityRow> rows;
    int regular_count = 0;
    int singular_count = 0;
    double max_residual = 0.0;
    double min_margin = kInfinity;
    bool pass = true;  // regular residuals within the documented bound
    double h = 0.0;
    double tol = 0.0;
};

namespace detail {

inline bool stencil_regular(const ProblemSpec& spec, const ConjugateView& view, double t,
                            const Point& x, double h, const SolveOptions& opts) {
    if (!evaluate(spec, view, t, x, opts).singleton) return false;
    for (int s = -1; s <= 1; s += 2) {
        if (!evaluate(spec, view, t + s * h, x, opts).singleton) return false;
        Point probe = x;
        for (std::size_t d = 0; d < x.size(); ++d) {
            probe[d] = x[d] + s * h;
            if (!evaluate(spec, view, t, probe, opts).singleton) return false;
            probe[d] = x[d];
        }
    }
    return true;
}

}  // namespace detail

/// Numeric check of the viscosity-solution properties. Regular points get the
/// central-difference PDE residual |u_t + H(u_x)| <= kResidualSlopeBound*h +
/// tol. Singular points get the supersolution inequality p + H(q) >= -tol on
/// sampled convex combinations of the reachable-gradient pairs (D^-u = co
/// D*u); a negative margin there is classified, not failed, since it marks
/// the singular-arc configuration. The subsolution side at singular points is
/// vacuous: D^+u is empty where the convex function u is not differentiable.
inline ViscosityReport viscosity_audit(const ProblemSpec& spec, const ConjugateView& view,
                                       const Box& x_window, int samples, double h,
                                       std::uint64_t seed = kDefaultSeed,
                                       const std::vector<std::pair<double, Point>>& extra_points = {},
                                       double tol = 1e-5, const SolveOptions& opts = {}) {
    ViscosityReport report;
    report.h = h;
    report.tol = tol;
    Rng rng(seed);

    std::vector<std::pair<double, Point>> points = extra_points;
    int attempts = 0;
    while (static_cast<int>(points.size()) < samples + static_cast<int>(extra_points.size()) &&
           attempts < 100 * samples) {
        ++attempts;
        const double t = rng.uniform(2.0 * h + 1e-3, spec.horizon - 2.0 * h - 1e-3);
        Point x(static_cast<std::size_t>(spec.dim));
        for (std::size_t d = 0; d < x.size(); ++d)
            x[d] = rng.uniform(x_window.lo[d], x_window.hi[d]);
        points.emplace_back(t, std::move(x));
    }

    for (const auto& [t, x] : points) {
        ViscosityRow row;
        row.t = t;
        row.x = x;
        MaximizerSet ms = evaluate(spec, view, t, x, opts);
        if (ms.singleton) {
            if (!detail::stencil_regular(spec, view, t, x, h, opts)) {
                // The difference stencil straddles the singular set; the
                // one-sided derivatives would be meaningless here.
                row.note = "skipped: stencil touches singular set";
                report.rows.push_back(std::move(row));
                continue;
            }
            row.regular = true;
            auto grad = u_fd_gradient(spec, view, t, x, h, opts);
            const double hv = spec.hamiltonian(grad.second);
            hj::detail::check_finite(hv, "H", grad.second);
            row.residual = std::fabs(grad.first + hv);
            row.within_bound = row.residual <= kResidualSlopeBound * h + tol;
            report.max_residual = std::max(report.max_residual, row.residual);
            report.pass = report.pass && row.within_bound;
            ++report.regular_count;
        } else {
            row.regular = false;
            std::vector<GradientPair> pairs;
            for (const auto& q : ms.representatives) pairs.push_back({-spec.hamiltonian(q), q});
            double min_margin = kInfinity, alpha = -kInfinity;
            auto eval_comb = [&](const std::vector<double>& w) {
                double p = 0.0;
                Point q(x.size(), 0.0);
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    p += w[i] * pairs[i].p;
                    for (std::size_t d = 0; d < q.size(); ++d) q[d] += w[i] * pairs[i].q[d];
                }
                const double g = p + spec.hamiltonian(q);
                min_margin = std::min(min_margin, g);
                alpha = std::max(alpha, g);
            };
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                std::vector<double> w(pairs.size(), 0.0);
                w[i] = 1.0;
                eval_comb(w);
            }
            for (int k = 0; k < 10; ++k) eval_comb(detail::simplex_weights(rng, pairs.size()));
            row.min_margin = min_margin;
            row.alpha = alpha;
            report.min_margin = std::min(report.min_margin, min_margin);
            if (min_margin < -tol)
                row.note = "negative margin on sampled co D*u: singular-arc configuration";
            ++report.singular_count;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace hj
