#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hj/conjugate.hpp"
#include "hj/errors.hpp"
#include "hj/parallel.hpp"
#include "hj/problem.hpp"
#include "hj/types.hpp"

namespace hj {

struct SolveOptions {
    int grid_nodes = 2001;           // per axis, 1-D default
    int grid_nodes_nd = 201;         // per axis when dim >= 2
    double value_tol_rel = 1e-9;     // near-max filter, relative to 1 + |value|
    double band_rel = 1e-4;          // pre-refinement band, relative to grid value range
    double cluster_tol_rel = 1e-4;   // merge radius, relative to domain radius
    double singleton_tol_rel = 1e-3; // singleton verdict, relative to domain radius
    double refine_tol = 1e-11;       // golden-section bracket width (absolute, scaled)
    int max_walk = 64;               // bracket walking steps per candidate
    int workers = 0;                 // 0 = HJ_WORKERS env or hardware concurrency

    double cluster_tol(double domain_radius) const { return cluster_tol_rel * domain_radius; }
    double singleton_tol(double domain_radius) const { return singleton_tol_rel * domain_radius; }
};

/// The computed maximizer set l(t,x) of the Hopf objective, with the attained
/// value u(t,x). Multiple representatives signal a singular point; ties are
/// kept, never arbitrated.
struct MaximizerSet {
    double t = 0.0;
    Point x;
    double value = 0.0;
    std::vector<Point> representatives;
    double diameter = 0.0;
    double value_tol = 0.0;
    double cluster_tol = 0.0;
    double singleton_tol = 0.0;
    bool singleton = true;
};

/// Hopf objective phi(t,x,q) = <x,q> - sigma*(q) - t H(q). Returns -inf when
/// sigma*(q) = +inf; throws when H itself is non-finite at a feasible q.
inline double phi(const ProblemSpec& spec, const ConjugateView& view, double t, const Point& x,
                  const Point& q) {
    const double star = view.value(q);
    if (star == kInfinity) return -kInfinity;
    const double h = spec.hamiltonian(q);
    detail::check_finite(h, "H", q);
    return dot(x, q) - star - t * h;
}

namespace detail {

inline constexpr double kGolden = 0.6180339887498949;

/// Golden-section maximization on [a, b]; tracks the best probe seen so it
/// degrades gracefully on brackets that are not unimodal or contain -inf.
template <typename F>
std::pair<double, double> golden_max(F&& f, double a, double b, double tol) {
    double best_x = 0.5 * (a + b);
    double best_f = f(best_x);
    auto consider = [&](double x, double v) {
        if (v > best_f) {
            best_f = v;
            best_x = x;
        }
    };
    consider(a, f(a));
    consider(b, f(b));
    double c = b - kGolden * (b - a);
    double d = a + kGolden * (b - a);
    double fc = f(c), fd = f(d);
    consider(c, fc);
    consider(d, fd);
    int guard = 200;
    while (b - a > tol && guard-- > 0) {
        if (fc < fd) {
            a = c;
            c = d;
            fc = fd;
            d = a + kGolden * (b - a);
            fd = f(d);
            consider(d, fd);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - kGolden * (b - a);
            fc = f(c);
            consider(c, fc);
        }
    }
    return {best_x, best_f};
}

/// Local ascent that slides its bracket whenever the maximum lands on a
/// bracket edge, so candidates escape monotone runs and converge to the
/// nearest interior maximum (or a domain endpoint).
template <typename F>
std::pair<double, double> walk_refine(F&& f, double q0, double h, double lo, double hi,
                                      double tol, int max_walk) {
    double center = q0;
    double width = std::max(h, tol);
    std::pair<double, double> result{q0, f(q0)};
    for (int iter = 0; iter < max_walk; ++iter) {
        const double a = std::max(lo, center - width);
        const double b = std::min(hi, center + width);
        if (b - a <= tol) break;
        result = golden_max(f, a, b, tol);
        const double edge = 0.02 * (b - a);
        if (result.first - a <= edge && a > lo) {
            center = a;
            width = std::min(width * 1.7, hi - lo);
            continue;
        }
        if (b - result.first <= edge && b < hi) {
            center = b;
            width = std::min(width * 1.7, hi - lo);
            continue;
        }
        break;
    }
    return result;
}

struct Candidate {
    Point q;
    double value;
};

/// Single-linkage clustering at merge radius `tol`; each cluster is
/// represented by its best-value member.
inline std::vector<Candidate> cluster_candidates(std::vector<Candidate> cands, double tol) {
    if (cands.empty()) return cands;
    if (cands.front().q.size() == 1) {
        std::sort(cands.begin(), cands.end(),
                  [](const Candidate& a, const Candidate& b) { return a.q[0] < b.q[0]; });
        std::vector<Candidate> reps;
        Candidate best = cands.front();
        double run_end = cands.front().q[0];
        for (std::size_t i = 1; i < cands.size(); ++i) {
            if (cands[i].q[0] - run_end > tol) {
                reps.push_back(best);
                best = cands[i];
            } else if (cands[i].value > best.value) {
                best = cands[i];
            }
            run_end = cands[i].q[0];
        }
        reps.push_back(best);
        return reps;
    }
    // n-D: greedy union-find by pairwise distance.
    std::vector<int> parent(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> find = [&](int i) {
        while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
        return i;
    };
    for (std::size_t i = 0; i < cands.size(); ++i)
        for (std::size_t j = i + 1; j < cands.size(); ++j)
            if (dist(cands[i].q, cands[j].q) <= tol)
                parent[static_cast<std::size_t>(find(static_cast<int>(j)))] =
                    find(static_cast<int>(i));
    std::vector<Candidate> reps;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (find(static_cast<int>(i)) != static_cast<int>(i)) continue;
        Candidate best = cands[i];
        for (std::size_t j = 0; j < cands.size(); ++j)
            if (find(static_cast<int>(j)) == static_cast<int>(i) && cands[j].value > best.value)
                best = cands[j];
        reps.push_back(best);
    }
    std::sort(reps.begin(), reps.end(),
              [](const Candidate& a, const Candidate& b) { return a.q < b.q; });
    return reps;
}

}  // namespace detail

/// Evaluates the Hopf formula at (t, x): coarse grid over B'(0, M), local
/// ascent from every grid node inside the near-max band, then near-max
/// filtering and clustering of the refined points.
inline MaximizerSet evaluate(const ProblemSpec& spec, const ConjugateView& view, double t,
                             const Point& x, const SolveOptions& opts = {}) {
    if (t < 0.0 || t >= spec.horizon)
        throw DomainError("evaluate requires t in [0, T); got t = " + format_double(t) +
                          ", T = " + format_double(spec.horizon));
    const double m = view.domain_radius;
    const int dim = view.dim;
    if (static_cast<int>(x.size()) != dim)
        throw ConfigurationError("evaluate: x has " + std::to_string(x.size()) +
                                 " coordinate(s), the problem has dimension " +
                                 std::to_string(dim));

    MaximizerSet out;
    out.t = t;
    out.x = x;
    out.cluster_tol = opts.cluster_tol(m);
    out.singleton_tol = opts.singleton_tol(m);

    Point q(static_cast<std::size_t>(dim));
    auto objective_nd = [&](const Point& qq) { return phi(spec, view, t, x, qq); };

    std::vector<detail::Candidate> candidates;

    if (dim == 1) {
        auto objective = [&](double qv) {
            q[0] = qv;
            return phi(spec, view, t, x, q);
        };
        const std::vector<double> grid = linspace(-m, m, opts.grid_nodes);
        std::vector<double> values(grid.size());
        double best = -kInfinity, low = kInfinity;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            values[i] = objective(grid[i]);
            if (values[i] > best) best = values[i];
            if (values[i] != -kInfinity && values[i] < low) low = values[i];
        }
        if (best == -kInfinity)
            throw SearchWindowError(
                "evaluate: every grid value is -inf; dom sigma* does not meet the search grid");
        const double range = (low == kInfinity) ? 0.0 : best - low;
        const double value_tol = opts.value_tol_rel * (1.0 + std::fabs(best));
        const double threshold = best - std::max(opts.band_rel * range, value_tol);
        const double spacing = grid.size() > 1 ? grid[1] - grid[0] : m;
        const double refine_tol = opts.refine_tol * (1.0 + m);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (values[i] < threshold) continue;
            auto refined =
                detail::walk_refine(objective, grid[i], spacing, -m, m, refine_tol, opts.max_walk);
            if (refined.second >= values[i]) {
                candidates.push_back({point1(refined.first), refined.second});
            } else {
                candidates.push_back({point1(grid[i]), values[i]});
            }
        }
    } else {
        const int n = opts.grid_nodes_nd;
        std::vector<double> axis = linspace(-m, m, n);
        const double spacing = axis[1] - axis[0];
        const double refine_tol = opts.refine_tol * (1.0 + m);
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(std::pow(n, dim)));
        std::vector<Point> nodes;
        double best = -kInfinity, low = kInfinity;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        for (;;) {
            for (int d = 0; d < dim; ++d)
                q[static_cast<std::size_t>(d)] = axis[static_cast<std::size_t>(idx[static_cast<std::size_t>(d)])];
            const double v = objective_nd(q);
            nodes.push_back(q);
            values.push_back(v);
            if (v > best) best = v;
            if (v != -kInfinity && v < low) low = v;
            int d = 0;
            while (d < dim && ++idx[static_cast<std::size_t>(d)] == n) {
                idx[static_cast<std::size_t>(d)] = 0;
                ++d;
            }
            if (d == dim) break;
        }
        if (best == -kInfinity)
            throw SearchWindowError(
                "evaluate: every grid value is -inf; dom sigma* does not meet the search grid");
        const double range = (low == kInfinity) ? 0.0 : best - low;
        const double value_tol = opts.value_tol_rel * (1.0 + std::fabs(best));
        const double threshold = best - std::max(opts.band_rel * range, value_tol);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (values[i] < threshold) continue;
            // Cyclic coordinate ascent with the same walking bracket.
            Point cur = nodes[i];
            double cur_v = values[i];
            for (int sweep = 0; sweep < 3; ++sweep) {
                for (int d = 0; d < dim; ++d) {
                    auto slice = [&](double qv) {
                        Point probe = cur;
                        probe[static_cast<std::size_t>(d)] = qv;
                        return objective_nd(probe);
                    };
                    auto refined = detail::walk_refine(slice, cur[static_cast<std::size_t>(d)],
                                                       spacing, -m, m, refine_tol, opts.max_walk);
                    if (refined.second >= cur_v) {
                        cur[static_cast<std::size_t>(d)] = refined.first;
                        cur_v = refined.second;
                    }
                }
            }
            if (cur_v >= values[i]) {
                candidates.push_back({cur, cur_v});
            } else {
                candidates.push_back({nodes[i], values[i]});
            }
        }
    }

    double best_value = -kInfinity;
    for (const auto& c : candidates) best_value = std::max(best_value, c.value);
    out.value = best_value;
    out.value_tol = opts.value_tol_rel * (1.0 + std::fabs(best_value));

    std::vector<detail::Candidate> near_max;
    for (const auto& c : candidates)
        if (c.value >= best_value - out.value_tol) near_max.push_back(c);
    const auto reps = detail::cluster_candidates(std::move(near_max), out.cluster_tol);
    for (const auto& r : reps) out.representatives.push_back(r.q);

    out.diameter = 0.0;
    for (std::size_t i = 0; i < out.representatives.size(); ++i)
        for (std::size_t j = i + 1; j < out.representatives.size(); ++j)
            out.diameter = std::max(out.diameter, dist(out.representatives[i], out.representatives[j]));
    out.singleton = out.diameter <= out.singleton_tol;
    return out;
}

/// u(t, x) alone.
inline double u_value(const ProblemSpec& spec, const ConjugateView& view, double t, const Point& x,
                      const SolveOptions& opts = {}) {
    return evaluate(spec, view, t, x, opts).value;
}

/// Central-difference gradient (u_t, u_x) of the Hopf value; h must keep the
/// stencil inside [0, T) x R^n and away from the singular set.
inline std::pair<double, Point> u_fd_gradient(const ProblemSpec& spec, const ConjugateView& view,
                                              double t, const Point& x, double h,
                                              const SolveOptions& opts = {}) {
    const double ut =
        (u_value(spec, view, t + h, x, opts) - u_value(spec, view, t - h, x, opts)) / (2.0 * h);
    Point ux(x.size());
    Point probe = x;
    for (std::size_t d = 0; d < x.size(); ++d) {
        probe[d] = x[d] + h;
        const double up = u_value(spec, view, t, probe, opts);
        probe[d] = x[d] - h;
        const double um = u_value(spec, view, t, probe, opts);
        probe[d] = x[d];
        ux[d] = (up - um) / (2.0 * h);
    }
    return {ut, ux};
}

// ---------------------------------------------------------------------------
// Field tabulation

struct FieldRow {
    double t = 0.0;
    Point x;
    double u = 0.0;
    double diameter = 0.0;
    bool singleton = true;
};

struct FieldTable {
    std::vector<FieldRow> rows;  // sorted by (t, then x lexicographically)
};

/// Tabulates (t, x, u, diameter, singleton) over the product grid;
/// embarrassingly parallel with deterministic row order. Evaluate errors are
/// re-thrown with the offending node coordinates attached.
inline FieldTable field(const ProblemSpec& spec, const ConjugateView& view,
                        std::vector<double> t_values, const Box& window,
                        const std::vector<int>& resolution, const SolveOptions& opts = {}) {
    std::sort(t_values.begin(), t_values.end());
    const int dim = window.dim();
    std::vector<std::vector<double>> axes;
    std::size_t nodes_per_level = 1;
    for (int d = 0; d < dim; ++d) {
        axes.push_back(linspace(window.lo[static_cast<std::size_t>(d)],
                                window.hi[static_cast<std::size_t>(d)],
                                resolution[static_cast<std::size_t>(d)]));
        nodes_per_level *= axes.back().size();
    }
    const std::size_t total = t_values.size() * nodes_per_level;
    FieldTable table;
    table.rows.resize(total);
    std::vector<std::string> errors(total);

    parallel_for(
        total,
        [&](std::size_t k) {
            const std::size_t it = k / nodes_per_level;
            std::size_t rem = k % nodes_per_level;
            Point x(static_cast<std::size_t>(dim));
            // Last axis varies fastest so rows come out sorted.
            for (int d = dim - 1; d >= 0; --d) {
                const auto& ax = axes[static_cast<std::size_t>(d)];
                x[static_cast<std::size_t>(d)] = ax[rem % ax.size()];
                rem /= ax.size();
            }
            FieldRow row;
            row.t = t_values[it];
            row.x = x;
            try {
                MaximizerSet ms = evaluate(spec, view, row.t, x, opts);
                row.u = ms.value;
                row.diameter = ms.diameter;
                row.singleton = ms.singleton;
            } catch (const std::exception& e) {
                errors[k] = std::string(e.what()) + " [at node t=" + format_double(row.t) +
                            ", x=" + format_point(x) + "]";
            }
            table.rows[k] = row;
        },
        opts.workers);

    for (const auto& msg : errors)
        if (!msg.empty()) throw EvaluationError(msg);
    return table;
}

}  // namespace hj
