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

/// Time step delta with delta * sup|H_p| <= eps, so a singular point at t
/// stays inside B'(x, eps) at t + delta. Returns +inf when H_p vanishes
/// identically (singularities do not move).
inline double delta_for(const ProblemSpec& spec, const ConjugateView& view, double eps) {
    if (eps <= 0.0) throw PreconditionError("delta_for requires eps > 0");
    const double s = speed_bound(spec, view.domain_radius);
    if (s == 0.0) return kInfinity;
    return eps / s;
}

struct SingularHit {
    Point x;
    double diameter = 0.0;
};

/// Scans B'(center, eps) for the x with the largest maximizer-set diameter,
/// refining once around the best candidate; returns it when the diameter
/// exceeds the singleton tolerance, none otherwise. Diameter maximization
/// keeps the traced path on the singular set's center.
inline std::optional<SingularHit> find_singular_near(const ProblemSpec& spec,
                                                     const ConjugateView& view, double t1,
                                                     const Point& center, double eps,
                                                     int ball_nodes = 33,
                                                     const SolveOptions& opts = {}) {
    if (t1 <= 0.0 || t1 >= spec.horizon)
        throw DomainError("find_singular_near requires t1 in (0, T)");
    if (eps <= 0.0) throw PreconditionError("find_singular_near requires eps > 0");
    if (spec.dim != 1)
        throw ConfigurationError("find_singular_near supports dim 1");

    auto scan = [&](double c, double radius, int nodes) {
        const std::vector<double> grid = centered_grid(c, radius, nodes);
        std::vector<double> diam(grid.size());
        parallel_for(
            grid.size(),
            [&](std::size_t i) {
                diam[i] = evaluate(spec, view, t1, point1(grid[i]), opts).diameter;
            },
            opts.workers);
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i)
            if (diam[i] > diam[best]) best = i;
        return SingularHit{point1(grid[best]), diam[best]};
    };

    SingularHit coarse = scan(center[0], eps, ball_nodes);
    const double spacing = 2.0 * eps / std::max(1, ball_nodes - 1);
    SingularHit fine = scan(coarse.x[0], 2.0 * spacing, ball_nodes);
    const SingularHit& best = fine.diameter >= coarse.diameter ? fine : coarse;
    // Keep the refined point inside the requested ball.
    if (std::fabs(best.x[0] - center[0]) > eps) {
        if (coarse.diameter > opts.singleton_tol(view.domain_radius))
            return coarse;
        return std::nullopt;
    }
    if (best.diameter > opts.singleton_tol(view.domain_radius)) return best;
    return std::nullopt;
}

struct PathNode {
    double t = 0.0;
    Point x;
    double diameter = 0.0;
};

struct SingularPath {
    std::vector<PathNode> nodes;  // strictly increasing t
    double step_eps = 0.0;
    double step_delta = 0.0;
    bool complete = false;        // reached t_end
    bool propagation_lost = false;
    int retried_steps = 0;
};

/// Traces forward propagation of a singular point: steps of size delta =
/// delta_for(eps), each step locating a singular x inside B'(x_k, eps). A
/// missed step is retried once with eps doubled and a 4x finer ball grid;
/// a second miss returns the partial path flagged "propagation lost".
inline SingularPath trace(const ProblemSpec& spec, const ConjugateView& view, double t0,
                          const Point& x0, double eps, double t_end, int ball_nodes = 33,
                          const SolveOptions& opts = {}) {
    MaximizerSet start = evaluate(spec, view, t0, x0, opts);
    if (start.singleton)
        throw PreconditionError("trace requires a singular start: diameter " +
                                format_double(start.diameter) + " <= tolerance " +
                                format_double(start.singleton_tol));
    double delta = delta_for(spec, view, eps);
    if (delta == kInfinity) {
        if (t_end >= spec.horizon)
            throw DomainError("trace requires t_end < T");
        delta = std::max(t_end - t0, 0.0);
    } else if (t_end > spec.horizon - delta) {
        throw DomainError("trace requires t_end <= T - delta; got t_end = " +
                          format_double(t_end) + ", T - delta = " +
                          format_double(spec.horizon - delta));
    }

    SingularPath path;
    path.step_eps = eps;
    path.step_delta = delta;
    path.nodes.push_back({t0, x0, start.diameter});

    double t = t0;
    Point x = x0;
    while (t < t_end) {
        const double t_next = std::min(t + delta, t_end);
        if (t_next <= t) break;
        auto hit = find_singular_near(spec, view, t_next, x, eps, ball_nodes, opts);
        if (!hit) {
            ++path.retried_steps;
            hit = find_singular_near(spec, view, t_next, x, 2.0 * eps, 4 * ball_nodes, opts);
        }
        if (!hit) {
            path.propagation_lost = true;
            return path;
        }
        t = t_next;
        x = hit->x;
        path.nodes.push_back({t, x, hit->diameter});
    }
    path.complete = true;
    return path;
}

// ---------------------------------------------------------------------------
// Arc direction hint

struct ArcHint {
    bool applicable = false;  // false at regular points
    double alpha = 0.0;       // max of p + H(q) over sampled co D*u
    double arg_p = 0.0;
    Point arg_q;
    std::vector<GradientPair> pairs;
    std::string classification;
};

/// alpha = max over sampled convex combinations of the reachable-gradient
/// pairs of p + H(q). alpha > 0 is the strict case (Lipschitz singular arc
/// guaranteed); alpha ~ 0 is degenerate and excluded by strict convexity of
/// sigma*; a negative alpha is reported verbatim for inspection.
inline ArcHint arc_direction_hint(const ProblemSpec& spec, const ConjugateView& view, double t0,
                                  const Point& x0, const SolveOptions& opts = {},
                                  std::uint64_t seed = kDefaultSeed) {
    ArcHint hint;
    MaximizerSet ms = evaluate(spec, view, t0, x0, opts);
    if (ms.singleton) {
        hint.classification = "not applicable: (t0, x0) is a regular point";
        return hint;
    }
    hint.applicable = true;
    for (const auto& q : ms.representatives) hint.pairs.push_back({-spec.hamiltonian(q), q});

    double best = -kInfinity;
    double best_p = 0.0;
    Point best_q;
    auto eval_comb = [&](const std::vector<double>& w) {
        double p = 0.0;
        Point q(x0.size(), 0.0);
        for (std::size_t i = 0; i < hint.pairs.size(); ++i) {
            p += w[i] * hint.pairs[i].p;
            for (std::size_t d = 0; d < q.size(); ++d) q[d] += w[i] * hint.pairs[i].q[d];
        }
        const double g = p + spec.hamiltonian(q);
        if (g > best) {
            best = g;
            best_p = p;
            best_q = q;
        }
    };

    const std::size_t k = hint.pairs.size();
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> w(k, 0.0);
        w[i] = 1.0;
        eval_comb(w);
    }
    if (k == 2) {
        // Dense lambda sweep plus golden refinement on the segment.
        auto g_of = [&](double lam) {
            std::vector<double> w{lam, 1.0 - lam};
            const double p = w[0] * hint.pairs[0].p + w[1] * hint.pairs[1].p;
            Point q(x0.size());
            for (std::size_t d = 0; d < q.size(); ++d)
                q[d] = w[0] * hint.pairs[0].q[d] + w[1] * hint.pairs[1].q[d];
            return p + spec.hamiltonian(q);
        };
        for (double lam : linspace(0.0, 1.0, 65)) {
            std::vector<double> w{lam, 1.0 - lam};
            eval_comb(w);
        }
        auto refined = detail::golden_max(g_of, 0.0, 1.0, 1e-12);
        std::vector<double> w{refined.first, 1.0 - refined.first};
        eval_comb(w);
    } else if (k > 2) {
        Rng rng(seed);
        for (int s = 0; s < 400; ++s) eval_comb(detail::simplex_weights(rng, k));
    }

    hint.alpha = best;
    hint.arg_p = best_p;
    hint.arg_q = best_q;
    const double tol = 1e-9 * (1.0 + std::fabs(best));
    if (best > tol) {
        hint.classification = "strict: alpha > 0, Lipschitz singular arc guaranteed";
    } else if (best >= -tol) {
        hint.classification = "degenerate: alpha ~ 0, excluded by strict convexity of sigma*";
    } else {
        hint.classification = "alpha < 0 on sampled hull: reported for inspection";
    }
    return hint;
}

}  // namespace hj
