#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hj/emit.hpp"
#include "hj/errors.hpp"
#include "hj/types.hpp"

namespace hj {

/// A Cauchy problem u_t + H(Du) = 0, u(0,x) = sigma(x) with H continuous and
/// sigma convex Lipschitz. Immutable after construction; callbacks must be
/// pure so they can be evaluated from many workers at once.
struct ProblemSpec {
    std::string name;
    int dim = 1;
    double horizon = 1.0;  // T > 0

    ScalarFn hamiltonian;       // p -> H(p)
    GradFn hamiltonian_grad;    // optional; central differences otherwise
    ScalarFn initial;           // x -> sigma(x)
    GradFn initial_grad;        // optional

    /// L such that sigma is L-Lipschitz; bounds dom sigma* inside B'(0, L).
    double lipschitz_bound = 1.0;

    std::optional<double> semiconvexity_h;      // gamma
    std::optional<double> semiconcavity_sigma;  // 1/mu

    /// Analytic conjugate of sigma when known (catalog fast path); the
    /// conjugate module falls back to the numeric transform otherwise.
    ScalarFn conjugate_value;
    std::function<SubgradientInterval(double)> conjugate_subgradient;  // 1-D only
};

namespace detail {

inline void check_finite(double v, const char* what, const Point& at) {
    if (!std::isfinite(v) && !(v == kInfinity)) {
        std::ostringstream os;
        os << what << " returned non-finite value at point (";
        for (std::size_t i = 0; i < at.size(); ++i) os << (i ? "," : "") << format_double(at[i]);
        os << ")";
        throw EvaluationError(os.str());
    }
}

/// Five-point central difference, O(h^4); keeps gradient fallbacks accurate
/// enough for root searches.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

inline Point fd_gradient(const ScalarFn& f, const Point& x, double h = 1e-6) {
    Point g(x.size());
    Point probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto slice = [&](double v) {
            probe[i] = v;
            double out = f(probe);
            probe[i] = x[i];
            return out;
        };
        g[i] = central_diff(slice, x[i], h * (1.0 + std::fabs(x[i])));
    }
    return g;
}

}  // namespace detail

inline Point grad_sigma(const ProblemSpec& spec, const Point& x) {
    if (spec.initial_grad) return spec.initial_grad(x);
    return detail::fd_gradient(spec.initial, x);
}

inline Point grad_h(const ProblemSpec& spec, const Point& p) {
    if (spec.hamiltonian_grad) return spec.hamiltonian_grad(p);
    return detail::fd_gradient(spec.hamiltonian, p);
}

// ---------------------------------------------------------------------------
// Catalog

namespace detail {

/// sigma(x) = x^2/2 inside |x| <= R, continued with slopes +-R outside, so
/// sigma is convex, C^1 and exactly R-Lipschitz. Conjugate: q^2/2 on [-R, R].
struct TruncatedQuadratic {
    double radius;

    double value(double x) const {
        const double a = std::fabs(x);
        return a <= radius ? 0.5 * x * x : radius * a - 0.5 * radius * radius;
    }
    double slope(double x) const { return std::clamp(x, -radius, radius); }
    double conjugate(double q) const {
        return std::fabs(q) <= radius ? 0.5 * q * q : kInfinity;
    }
    SubgradientInterval subgradient(double q) const {
        const double snap = 1e-12 * (1.0 + radius);
        SubgradientInterval s;
        if (q >= radius - snap) {
            s.lo = radius;
            s.hi = radius;
            s.unbounded_above = true;
        } else if (q <= -radius + snap) {
            s.lo = -radius;
            s.hi = -radius;
            s.unbounded_below = true;
        } else {
            s.lo = s.hi = q;
        }
        return s;
    }
};

inline void install_truncated_quadratic(ProblemSpec& spec, double radius) {
    TruncatedQuadratic tq{radius};
    spec.initial = [tq](const Point& x) { return tq.value(x[0]); };
    spec.initial_grad = [tq](const Point& x) { return point1(tq.slope(x[0])); };
    spec.lipschitz_bound = radius;
    spec.conjugate_value = [tq](const Point& q) { return tq.conjugate(q[0]); };
    spec.conjugate_subgradient = [tq](double q) { return tq.subgradient(q); };
}

}  // namespace detail

inline std::vector<std::string> catalog_names() {
    return {"log-example", "sqrt-example", "zero-h", "linear-sigma", "quad-quad"};
}

/// Built-in problems. `log-example` and `sqrt-example` are the two worked
/// examples with H(p) = -ln(1+p^2) and H(p) = -sqrt(1+p^2); both use the
/// quadratic initial datum truncated to slope +-4 outside |x| <= 4, far
/// enough out that every studied maximizer and characteristic anchor stays
/// inside the quadratic region.
inline ProblemSpec catalog_lookup(const std::string& name) {
    ProblemSpec spec;
    spec.name = name;
    spec.dim = 1;
    if (name == "log-example") {
        spec.horizon = 4.0;
        spec.hamiltonian = [](const Point& p) { return -std::log(1.0 + p[0] * p[0]); };
        spec.hamiltonian_grad = [](const Point& p) {
            return point1(-2.0 * p[0] / (1.0 + p[0] * p[0]));
        };
        detail::install_truncated_quadratic(spec, 4.0);
        spec.semiconvexity_h = 2.0;      // min H'' = -2 at p = 0
        spec.semiconcavity_sigma = 1.0;  // sigma'' <= 1
        return spec;
    }
    if (name == "sqrt-example") {
        spec.horizon = 6.0;
        spec.hamiltonian = [](const Point& p) { return -std::sqrt(1.0 + p[0] * p[0]); };
        spec.hamiltonian_grad = [](const Point& p) {
            return point1(-p[0] / std::sqrt(1.0 + p[0] * p[0]));
        };
        detail::install_truncated_quadratic(spec, 4.0);
        spec.semiconvexity_h = 1.0;  // min H'' = -1 at p = 0
        spec.semiconcavity_sigma = 1.0;
        return spec;
    }
    if (name == "zero-h") {
        spec.horizon = 2.0;
        spec.hamiltonian = [](const Point&) { return 0.0; };
        spec.hamiltonian_grad = [](const Point&) { return point1(0.0); };
        detail::install_truncated_quadratic(spec, 2.0);
        spec.semiconvexity_h = 1e-9;  // H is convex; any positive constant works
        spec.semiconcavity_sigma = 1.0;
        return spec;
    }
    if (name == "linear-sigma") {
        const double a = 2.0;
        spec.horizon = 2.0;
        spec.hamiltonian = [](const Point& p) { return -std::log(1.0 + p[0] * p[0]); };
        spec.hamiltonian_grad = [](const Point& p) {
            return point1(-2.0 * p[0] / (1.0 + p[0] * p[0]));
        };
        spec.initial = [a](const Point& x) { return a * x[0]; };
        spec.initial_grad = [a](const Point&) { return point1(a); };
        spec.lipschitz_bound = std::fabs(a);
        // Conjugate of a linear function: indicator of the single slope.
        spec.conjugate_value = [a](const Point& q) {
            return std::fabs(q[0] - a) <= 1e-9 * (1.0 + std::fabs(a)) ? 0.0 : kInfinity;
        };
        spec.conjugate_subgradient = [a](double q) {
            SubgradientInterval s;
            if (std::fabs(q - a) > 1e-9 * (1.0 + std::fabs(a))) return s;
            s.unbounded_below = s.unbounded_above = true;
            s.lo = s.hi = 0.0;
            return s;
        };
        spec.semiconvexity_h = 2.0;
        spec.semiconcavity_sigma = 1.0;
        return spec;
    }
    if (name == "quad-quad") {
        spec.horizon = 2.0;
        spec.hamiltonian = [](const Point& p) { return 0.5 * p[0] * p[0]; };
        spec.hamiltonian_grad = [](const Point& p) { return point1(p[0]); };
        detail::install_truncated_quadratic(spec, 4.0);
        spec.semiconvexity_h = 1e-9;
        spec.semiconcavity_sigma = 1.0;
        return spec;
    }
    std::string known;
    for (const auto& n : catalog_names()) known += (known.empty() ? "" : ", ") + n;
    throw LookupError("unknown catalog problem '" + name + "'; available: " + known);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string name;
    bool pass = false;
    double worst = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Samples convexity, the Lipschitz bound, and gradient consistency against
/// central differences on [-3,3]^n. Failures are recorded, not thrown;
/// non-finite callback values do throw, naming the point.
inline ValidationReport validate(const ProblemSpec& spec, int samples, double tol) {
    if (samples < 8) throw PreconditionError("validate requires samples >= 8");
    const double window = 3.0;
    ValidationReport report;

    auto sample_point = [&](int k, int n) {
        Point x(static_cast<std::size_t>(spec.dim));
        // Deterministic low-discrepancy-ish lattice over the window.
        for (int d = 0; d < spec.dim; ++d) {
            const double t = static_cast<double>((k * (2 * d + 1)) % n) / static_cast<double>(n - 1);
            x[static_cast<std::size_t>(d)] = -window + 2.0 * window * t;
        }
        return x;
    };

    auto eval_sigma = [&](const Point& x) {
        const double v = spec.initial(x);
        detail::check_finite(v, "sigma", x);
        return v;
    };
    auto eval_h = [&](const Point& p) {
        const double v = spec.hamiltonian(p);
        detail::check_finite(v, "H", p);
        return v;
    };

    // Convexity: midpoint inequality on sampled pairs.
    {
        ValidationCheck c{"sigma_convexity", true, 0.0, ""};
        for (int i = 0; i < samples; ++i) {
            Point a = sample_point(i, samples);
            Point b = sample_point(i + samples / 2, samples);
            Point mid(a.size());
            for (std::size_t d = 0; d < a.size(); ++d) mid[d] = 0.5 * (a[d] + b[d]);
            const double gap = eval_sigma(mid) - 0.5 * (eval_sigma(a) + eval_sigma(b));
            c.worst = std::max(c.worst, gap);
        }
        c.pass = c.worst <= tol;
        report.checks.push_back(c);
    }

    // Lipschitz bound.
    {
        ValidationCheck c{"sigma_lipschitz", true, 0.0, ""};
        for (int i = 0; i < samples; ++i) {
            Point a = sample_point(i, samples);
            Point b = sample_point((i * 7 + 3) % samples, samples);
            const double d = dist(a, b);
            if (d < 1e-12) continue;
            const double excess = std::fabs(eval_sigma(a) - eval_sigma(b)) - spec.lipschitz_bound * d;
            c.worst = std::max(c.worst, excess);
        }
        c.pass = c.worst <= tol;
        report.checks.push_back(c);
    }

    // Gradient consistency against central differences.
    auto gradient_check = [&](const char* label, const ScalarFn& f, const GradFn& g) {
        ValidationCheck c{label, true, 0.0, ""};
        if (!g) {
            c.detail = "no analytic gradient supplied";
            report.checks.push_back(c);
            return;
        }
        for (int i = 0; i < samples; ++i) {
            Point x = sample_point(i, samples);
            Point analytic = g(x);
            Point numeric = detail::fd_gradient(f, x, 1e-5);
            for (std::size_t d = 0; d < analytic.size(); ++d)
                c.worst = std::max(c.worst, std::fabs(analytic[d] - numeric[d]));
        }
        c.pass = c.worst <= 1e-6 + tol;  // O(h^2) with h = 1e-5 plus tolerance
        report.checks.push_back(c);
    };
    gradient_check("sigma_gradient", eval_sigma, spec.initial_grad);
    gradient_check("h_gradient", eval_h, spec.hamiltonian_grad);

    return report;
}

}  // namespace hj
