#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hj/characteristics.hpp"
#include "hj/config.hpp"
#include "hj/conjugate.hpp"
#include "hj/hopf.hpp"
#include "hj/problem.hpp"
#include "hj/rng.hpp"
#include "oracles.hpp"

using namespace hj;
using Catch::Approx;

namespace {
struct Setup {
    ProblemSpec spec;
    ConjugateView view;
    explicit Setup(const std::string& name) : spec(catalog_lookup(name)), view(make_view(spec)) {}
};
}  // namespace

TEST_CASE("phi matches direct arithmetic on the worked example") {
    Setup s("log-example");
    // sigma*(2) = 2 by the brute-force conjugate oracle, so
    // phi(2, 2/5, 2) = 4/5 - sigma*(2) - 2 H(2) = 4/5 - 2 + 2 ln 5.
    CHECK(oracles::brute_conjugate(s.spec.initial, 2.0, 4.0, 100001) ==
          Approx(2.0).margin(1e-8));
    CHECK(phi(s.spec, s.view, 2.0, point1(0.4), point1(2.0)) ==
          Approx(0.8 - 2.0 + 2.0 * std::log(5.0)).margin(1e-12));
    // t = 0 drops the H term.
    CHECK(phi(s.spec, s.view, 0.0, point1(0.4), point1(0.5)) ==
          Approx(0.4 * 0.5 - 0.125).margin(1e-12));
    // Outside dom sigma* the objective is the -inf sentinel.
    CHECK(phi(s.spec, s.view, 1.0, point1(0.0), point1(4.5)) == -kInfinity);
}

TEST_CASE("phi with zero Hamiltonian ignores t") {
    Setup s("zero-h");
    const double a = phi(s.spec, s.view, 0.0, point1(0.7), point1(0.3));
    const double b = phi(s.spec, s.view, 1.5, point1(0.7), point1(0.3));
    CHECK(a == Approx(b).margin(1e-15));
}

TEST_CASE("phi propagates non-finite Hamiltonians as evaluation errors") {
    Setup s("zero-h");
    ProblemSpec bad = s.spec;
    bad.hamiltonian = [](const Point&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(phi(bad, s.view, 0.5, point1(0.0), point1(0.1)), EvaluationError);
}

TEST_CASE("evaluate finds the singleton maximizer at (2, 2/5)") {
    Setup s("log-example");
    MaximizerSet ms = evaluate(s.spec, s.view, 2.0, point1(0.4));
    CHECK(ms.singleton);
    REQUIRE(ms.representatives.size() == 1);
    CHECK(ms.representatives[0][0] == Approx(2.0).margin(1e-6));
    CHECK(ms.value == Approx(0.8 - 2.0 + 2.0 * std::log(5.0)).margin(1e-9));
}

TEST_CASE("evaluate keeps both maximizers at the singular point (1, 0)") {
    Setup s("log-example");
    MaximizerSet ms = evaluate(s.spec, s.view, 1.0, point1(0.0));
    CHECK_FALSE(ms.singleton);
    REQUIRE(ms.representatives.size() == 2);
    CHECK(ms.representatives[0][0] == Approx(-1.0).margin(1e-6));
    CHECK(ms.representatives[1][0] == Approx(1.0).margin(1e-6));
    CHECK(ms.diameter == Approx(2.0).margin(1e-5));
}

TEST_CASE("evaluate on the indicator domain returns the single slope") {
    Setup s("linear-sigma");
    MaximizerSet ms = evaluate(s.spec, s.view, 0.8, point1(-0.3));
    CHECK(ms.singleton);
    REQUIRE(ms.representatives.size() == 1);
    CHECK(ms.representatives[0][0] == Approx(2.0));
    CHECK(ms.value == Approx(-0.6 - 0.8 * s.spec.hamiltonian(point1(2.0))).margin(1e-12));
}

TEST_CASE("evaluate domain and infeasibility errors") {
    Setup s("zero-h");
    CHECK_THROWS_AS(evaluate(s.spec, s.view, 2.0, point1(0.0)), DomainError);
    CHECK_THROWS_AS(evaluate(s.spec, s.view, -0.1, point1(0.0)), DomainError);

    ConjugateView empty = s.view;
    empty.value = [](const Point&) { return kInfinity; };
    CHECK_THROWS_AS(evaluate(s.spec, empty, 0.5, point1(0.0)), SearchWindowError);
}

TEST_CASE("evaluate at t = 0 returns the initial datum") {
    for (const auto& name : {"log-example", "zero-h", "quad-quad"}) {
        Setup s(name);
        for (double x : {-1.7, 0.0, 0.9, 3.1}) {
            MaximizerSet ms = evaluate(s.spec, s.view, 0.0, point1(x));
            INFO(name << " at x = " << x);
            CHECK(ms.value == Approx(s.spec.initial(point1(x))).margin(1e-6));
        }
    }
}

TEST_CASE("oracle equivalence: evaluate matches a 10x finer brute-force grid") {
    Setup s("log-example");
    Rng rng(kDefaultSeed);
    const SolveOptions opts;
    const double fine_spacing = 2.0 * s.view.domain_radius / (10 * opts.grid_nodes - 1);
    const double slope_bound = 10.0;
    for (int k = 0; k < 50; ++k) {
        const double t = rng.uniform(0.0, s.spec.horizon - 1e-3);
        const double x = rng.uniform(-2.5, 2.5);
        const double value = evaluate(s.spec, s.view, t, point1(x), opts).value;
        const double brute = oracles::brute_hopf_max(s.spec, s.view, t, x, 10 * opts.grid_nodes);
        CHECK(value >= brute - 1e-12);
        CHECK(value == Approx(brute).margin(1e-6 + fine_spacing * slope_bound));
    }
}

TEST_CASE("u is convex in (t, x)") {
    Setup s("log-example");
    Rng rng(kDefaultSeed);
    for (int k = 0; k < 100; ++k) {
        const double t1 = rng.uniform(0.05, s.spec.horizon - 0.05);
        const double t2 = rng.uniform(0.05, s.spec.horizon - 0.05);
        const double x1 = rng.uniform(-2.0, 2.0);
        const double x2 = rng.uniform(-2.0, 2.0);
        const double um = u_value(s.spec, s.view, 0.5 * (t1 + t2), point1(0.5 * (x1 + x2)));
        const double ua = u_value(s.spec, s.view, t1, point1(x1));
        const double ub = u_value(s.spec, s.view, t2, point1(x2));
        CHECK(um <= 0.5 * (ua + ub) + 1e-8);
    }
}

TEST_CASE("initial trace: u(t, x) -> sigma(x) as t drops to 0") {
    Setup s("log-example");
    for (double x : {-2.0, -0.3, 0.0, 1.4, 2.5}) {
        CHECK(std::fabs(u_value(s.spec, s.view, 1e-4, point1(x)) - s.spec.initial(point1(x))) <=
              1e-3);
    }
}

TEST_CASE("Hopf max formula agrees with the Hopf-Lax min formula when both apply") {
    Setup s("quad-quad");
    auto h_star = [](double v) { return 0.5 * v * v; };  // (p^2/2)* = v^2/2
    for (double t : linspace(0.1, 1.9, 5)) {
        for (double x : linspace(-2.0, 2.0, 5)) {
            const double hopf = oracles::brute_hopf_max(s.spec, s.view, t, x, 16001);
            const double lax = oracles::hopf_lax_min(s.spec, h_star, t, x, 6.0, 16001);
            CHECK(hopf == Approx(lax).margin(1e-5));
            // Closed form for the untruncated problem on this window.
            CHECK(hopf == Approx(x * x / (2.0 * (1.0 + t))).margin(1e-5));
        }
    }
}

TEST_CASE("upper semicontinuity of the maximizer map approaching (1, 0)") {
    Setup s("log-example");
    MaximizerSet limit = evaluate(s.spec, s.view, 1.0, point1(0.0));
    for (double offset : {0.2, 0.05, 0.01, 0.002}) {
        // Approach from above in t: both maximizers persist and converge.
        MaximizerSet from_t = evaluate(s.spec, s.view, 1.0 + offset, point1(0.0));
        for (const auto& rep : from_t.representatives) {
            double best = kInfinity;
            for (const auto& lrep : limit.representatives) best = std::min(best, dist(rep, lrep));
            CHECK(best <= limit.cluster_tol + 2.0 * offset);
        }
        // Approach in x: the singleton maximizer stays near one limit point.
        MaximizerSet from_x = evaluate(s.spec, s.view, 1.0, point1(offset));
        for (const auto& rep : from_x.representatives) {
            double best = kInfinity;
            for (const auto& lrep : limit.representatives) best = std::min(best, dist(rep, lrep));
            CHECK(best <= limit.cluster_tol + 3.0 * std::sqrt(offset));
        }
    }
}

TEST_CASE("field tabulates the product grid in deterministic order") {
    Setup s("log-example");
    FieldTable table = field(s.spec, s.view, {0.25}, box1(-2.0, 2.0), {101});
    REQUIRE(table.rows.size() == 101);
    for (const auto& row : table.rows) CHECK(row.singleton);
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        CHECK(table.rows[i].x[0] > table.rows[i - 1].x[0]);

    FieldTable zero = field(catalog_lookup("zero-h"), make_view(catalog_lookup("zero-h")), {0.5},
                            box1(-1.5, 1.5), {41});
    ProblemSpec zspec = catalog_lookup("zero-h");
    for (const auto& row : zero.rows)
        CHECK(row.u == Approx(zspec.initial(row.x)).margin(1e-9));
}

TEST_CASE("field rows do not depend on the worker count") {
    Setup s("log-example");
    SolveOptions serial;
    serial.workers = 1;
    SolveOptions parallel;
    parallel.workers = 4;
    FieldTable a = field(s.spec, s.view, {0.4, 1.0}, box1(-1.0, 1.0), {31}, serial);
    FieldTable b = field(s.spec, s.view, {0.4, 1.0}, box1(-1.0, 1.0), {31}, parallel);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].t == b.rows[i].t);
        CHECK(a.rows[i].x[0] == b.rows[i].x[0]);
        CHECK(a.rows[i].u == b.rows[i].u);
        CHECK(a.rows[i].singleton == b.rows[i].singleton);
    }
}

TEST_CASE("field flags the singular node at x = 0 for t = 1") {
    Setup s("log-example");
    FieldTable table = field(s.spec, s.view, {1.0}, box1(-2.0, 2.0), {101});
    int non_singleton = 0;
    for (const auto& row : table.rows) {
        if (!row.singleton) {
            ++non_singleton;
            CHECK(row.x[0] == Approx(0.0).margin(1e-12));
            CHECK(row.diameter == Approx(2.0).margin(1e-4));
        }
    }
    CHECK(non_singleton == 1);
}

TEST_CASE("field attaches node coordinates to propagated errors") {
    Setup s("zero-h");
    try {
        field(s.spec, s.view, {5.0}, box1(-1.0, 1.0), {5});  // t beyond the horizon
        FAIL("expected EvaluationError");
    } catch (const EvaluationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("t=5") != std::string::npos);
    }
}

TEST_CASE("maximizer-set contract at random points") {
    Setup s("log-example");
    Rng rng(kDefaultSeed);
    const double m = s.view.domain_radius;
    for (int k = 0; k < 40; ++k) {
        const double t = rng.uniform(0.0, s.spec.horizon - 1e-3);
        const double x = rng.uniform(-3.0, 3.0);
        MaximizerSet ms = evaluate(s.spec, s.view, t, point1(x));
        REQUIRE_FALSE(ms.representatives.empty());
        for (const auto& rep : ms.representatives) {
            CHECK(std::fabs(rep[0]) <= m + 1e-12);
            CHECK(phi(s.spec, s.view, t, point1(x), rep) >= ms.value - ms.value_tol - 1e-15);
        }
        CHECK(ms.singleton == (ms.diameter <= ms.singleton_tol));
    }
}

TEST_CASE("an affine stretch of sigma* keeps every tied maximizer") {
    // sigma(x) = |x| continued steeply makes sigma* = 0 on [-1, 1]. At t = 0,
    // x = 0 the objective is identically zero on the whole domain: the
    // maximizer set is the full interval and the diameter must say so.
    ProblemSpec spec;
    spec.name = "plateau";
    spec.dim = 1;
    spec.horizon = 1.0;
    spec.hamiltonian = [](const Point& p) { return -p[0] * p[0]; };
    spec.hamiltonian_grad = [](const Point& p) { return point1(-2.0 * p[0]); };
    spec.initial = [](const Point& x) { return std::fabs(x[0]); };
    spec.lipschitz_bound = 1.0;
    ConjugateView view = conjugate_numeric(spec.initial, 1, 3.0, 1.0, 2001);
    view.domain_radius = 1.0;

    MaximizerSet flat = evaluate(spec, view, 0.0, point1(0.0));
    CHECK_FALSE(flat.singleton);
    CHECK(flat.diameter == Approx(2.0).margin(1e-2));
    CHECK(flat.value == Approx(0.0).margin(1e-9));

    // Tilting x selects one endpoint of the segment.
    MaximizerSet tilted = evaluate(spec, view, 0.0, point1(0.3));
    CHECK(tilted.singleton);
    CHECK(tilted.representatives[0][0] == Approx(1.0).margin(1e-6));
}

TEST_CASE("dimension mismatches are rejected at the library level") {
    Setup s("log-example");
    CHECK_THROWS_AS(evaluate(s.spec, s.view, 0.5, Point{0.1, 0.2}), ConfigurationError);
}

TEST_CASE("random max-affine initial data: evaluate matches brute force") {
    // Hand-rolled generator: sigma(x) = max_i (a_i x + b_i) is convex and
    // max|a_i|-Lipschitz; its conjugate is polyhedral with genuine affine
    // segments and kinks, which stresses the band/cluster logic.
    Rng rng(kDefaultSeed);
    for (int trial = 0; trial < 12; ++trial) {
        const int pieces = 2 + static_cast<int>(rng.below(4));
        std::vector<double> slopes, offsets;
        double lip = 0.0;
        for (int i = 0; i < pieces; ++i) {
            slopes.push_back(rng.uniform(-3.0, 3.0));
            offsets.push_back(rng.uniform(-1.0, 1.0));
            lip = std::max(lip, std::fabs(slopes.back()));
        }
        ProblemSpec spec;
        spec.name = "max-affine";
        spec.dim = 1;
        spec.horizon = 2.0;
        const bool log_h = rng.below(2) == 0;
        if (log_h) {
            spec.hamiltonian = [](const Point& p) { return -std::log(1.0 + p[0] * p[0]); };
        } else {
            spec.hamiltonian = [](const Point& p) { return 0.5 * p[0] * p[0]; };
        }
        spec.initial = [slopes, offsets](const Point& x) {
            double v = -kInfinity;
            for (std::size_t i = 0; i < slopes.size(); ++i)
                v = std::max(v, slopes[i] * x[0] + offsets[i]);
            return v;
        };
        spec.lipschitz_bound = std::max(lip, 0.1);
        ConjugateView view = conjugate_numeric(spec.initial, 1, spec.lipschitz_bound + 1.0,
                                               spec.lipschitz_bound, 4001);
        view.domain_radius = spec.lipschitz_bound;

        for (int k = 0; k < 4; ++k) {
            const double t = rng.uniform(0.0, spec.horizon - 1e-3);
            const double x = rng.uniform(-2.0, 2.0);
            const double value = evaluate(spec, view, t, point1(x)).value;
            const double brute = oracles::brute_hopf_max(spec, view, t, x, 20001);
            // The conjugate is polyhedral, so the objective has kink maxima
            // the plain grid misses at first order: the oracle is only good
            // to (grid spacing) * (slope bound of the objective).
            const double m = view.domain_radius;
            const double spacing = 2.0 * m / 20000.0;
            const double slope_bound =
                std::fabs(x) + (m + 1.0) + spec.horizon * std::max(1.0, m);
            INFO("trial " << trial << " t=" << t << " x=" << x);
            CHECK(value >= brute - 1e-10);
            CHECK(value == Approx(brute).margin(1e-6 + spacing * slope_bound));
        }
    }
}

TEST_CASE("expression-defined problem reproduces the worked example") {
    // Same Hamiltonian and a plain quadratic datum, built from expressions:
    // gradients fall back to central differences and the conjugate view is
    // the numeric transform restricted to the declared momentum ball.
    ProblemSpec spec = load_problem_config_text(
        "H = -ln(1+p^2)\n"
        "sigma = x^2/2\n"
        "dim = 1\n"
        "horizon = 4\n"
        "lipschitz = 4\n");
    ConjugateView view = make_view(spec);
    CHECK(view.mode == ConjugateMode::numeric);

    MaximizerSet ms = evaluate(spec, view, 1.0, point1(0.0));
    REQUIRE(ms.representatives.size() == 2);
    CHECK(ms.representatives[0][0] == Approx(-1.0).margin(1e-3));
    CHECK(ms.representatives[1][0] == Approx(1.0).margin(1e-3));
    CHECK(ms.value == Approx(-0.5 + std::log(2.0)).margin(1e-5));

    // The characteristic search runs on finite-difference gradients here.
    auto curves = through_point(spec, view, 1.0, point1(0.0));
    REQUIRE(curves.size() == 3);
    CHECK(curves[0].anchor_y[0] == Approx(-1.0).margin(1e-5));
    CHECK(curves[2].anchor_y[0] == Approx(1.0).margin(1e-5));
}

TEST_CASE("two-dimensional evaluate against a separable problem") {
    // sigma(x) = |x|^2/2 truncated per axis; H(p) = -ln(1 + |p|^2).
    ProblemSpec spec;
    spec.name = "2d";
    spec.dim = 2;
    spec.horizon = 2.0;
    spec.hamiltonian = [](const Point& p) { return -std::log(1.0 + p[0] * p[0] + p[1] * p[1]); };
    spec.initial = [](const Point& x) {
        auto clamp_sq = [](double v) {
            return std::fabs(v) <= 3.0 ? 0.5 * v * v : 3.0 * std::fabs(v) - 4.5;
        };
        return clamp_sq(x[0]) + clamp_sq(x[1]);
    };
    spec.lipschitz_bound = 3.0;
    ConjugateView view = conjugate_numeric(spec.initial, 2, 4.0, 3.0, 801);
    view.domain_radius = 3.0;

    SolveOptions opts;
    opts.grid_nodes_nd = 101;
    // At t = 0.25 the problem is within the regular strip; the maximizer for
    // x solves q = x - t * grad H(q), checked against a direct 2-D brute sweep.
    MaximizerSet ms = evaluate(spec, view, 0.25, Point{0.4, -0.2}, opts);
    CHECK(ms.singleton);
    double best = -kInfinity;
    Point arg(2);
    for (double a : linspace(-3.0, 3.0, 601)) {
        for (double b : linspace(-3.0, 3.0, 601)) {
            const Point q{a, b};
            const double v = phi(spec, view, 0.25, Point{0.4, -0.2}, q);
            if (v > best) {
                best = v;
                arg = q;
            }
        }
    }
    CHECK(ms.value == Approx(best).margin(1e-4));
    CHECK(dist(ms.representatives[0], arg) <= 2e-2);
}
