#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hj/characteristics.hpp"
#include "hj/conjugate.hpp"
#include "hj/problem.hpp"

using namespace hj;
using Catch::Approx;

namespace {
struct Setup {
    ProblemSpec spec;
    ConjugateView view;
    explicit Setup(const std::string& name) : spec(catalog_lookup(name)), view(make_view(spec)) {}
};
}  // namespace

TEST_CASE("three characteristics through (2, 2/5) for the log example") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 2.0, point1(0.4));
    REQUIRE(curves.size() == 3);
    const double r11 = std::sqrt(11.0);
    CHECK(curves[0].anchor_y[0] == Approx((-4.0 - r11) / 5.0).margin(1e-6));
    CHECK(curves[1].anchor_y[0] == Approx((-4.0 + r11) / 5.0).margin(1e-6));
    CHECK(curves[2].anchor_y[0] == Approx(2.0).margin(1e-6));
    // The curve from y = 2 is x = 2 - 4t/5.
    CHECK(curves[2].momentum[0] == Approx(2.0).margin(1e-6));
    CHECK(curves[2].velocity[0] == Approx(-0.8).margin(1e-6));
    CHECK(curves[2].position(0.0)[0] == Approx(2.0).margin(1e-6));
}

TEST_CASE("single characteristic through a regular early point") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 0.3, point1(0.0));
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].anchor_y[0] == Approx(0.0).margin(1e-9));
}

TEST_CASE("zero Hamiltonian: vertical characteristic from x0 itself") {
    Setup s("zero-h");
    auto curves = through_point(s.spec, s.view, 0.7, point1(0.45));
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].anchor_y[0] == Approx(0.45).margin(1e-12));
    CHECK(curves[0].velocity[0] == 0.0);
}

TEST_CASE("through_point windows and domain errors") {
    Setup s("log-example");
    CHECK_THROWS_AS(through_point(s.spec, s.view, 0.0, point1(0.0)), DomainError);
    CHECK_THROWS_AS(through_point(s.spec, s.view, 4.0, point1(0.0)), DomainError);
    CharOptions tiny;
    tiny.window = box1(3.5, 3.6);  // excludes every root of the (2, 2/5) cubic
    CHECK_THROWS_AS(through_point(s.spec, s.view, 2.0, point1(0.4), tiny), SearchWindowError);
}

TEST_CASE("re-anchored form agrees with the anchored line") {
    Setup s("log-example");
    const double t0 = 2.0;
    const Point x0 = point1(0.4);
    auto curves = through_point(s.spec, s.view, t0, x0);
    for (const auto& c : curves) {
        for (double t : {0.0, 0.5, 1.0, 1.5, 2.0}) {
            const double anchored = c.position(t)[0];
            const double reanchored = x0[0] + (t - t0) * c.velocity[0];
            // Identical up to the root-search residual.
            CHECK(anchored == Approx(reanchored).margin(1e-9));
        }
    }
}

TEST_CASE("every maximizer is the momentum of some found characteristic") {
    Setup s("log-example");
    for (const auto& [t, x] : std::vector<std::pair<double, double>>{
             {2.0, 0.4}, {1.0, 0.0}, {0.3, 0.5}, {1.5, 0.0}, {0.8, -1.2}}) {
        MaximizerSet ms = evaluate(s.spec, s.view, t, point1(x));
        auto curves = through_point(s.spec, s.view, t, point1(x));
        for (const auto& rep : ms.representatives) {
            double best = kInfinity;
            for (const auto& c : curves) best = std::min(best, dist(c.momentum, rep));
            INFO("t=" << t << " x=" << x);
            CHECK(best <= ms.cluster_tol);
        }
    }
}

TEST_CASE("classification at (2, 2/5): type I from y=2, type II from the others") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 2.0, point1(0.4));
    REQUIRE(curves.size() == 3);
    CHECK(classify(s.spec, s.view, curves[0], 2.0, point1(0.4)).tag == CurveType::TypeII);
    CHECK(classify(s.spec, s.view, curves[1], 2.0, point1(0.4)).tag == CurveType::TypeII);
    CHECK(classify(s.spec, s.view, curves[2], 2.0, point1(0.4)).tag == CurveType::TypeI);
}

TEST_CASE("classification on the singular segment at (1, 0)") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 1.0, point1(0.0));
    REQUIRE(curves.size() == 3);
    // Anchors sorted: -1, 0, +1. The axis curve (y = 0) is type II, the two
    // curves from +-sqrt(2t-1) = +-1 are type I.
    CHECK(curves[0].anchor_y[0] == Approx(-1.0).margin(1e-6));
    CHECK(curves[1].anchor_y[0] == Approx(0.0).margin(1e-6));
    CHECK(curves[2].anchor_y[0] == Approx(1.0).margin(1e-6));
    CHECK(classify(s.spec, s.view, curves[0], 1.0, point1(0.0)).tag == CurveType::TypeI);
    CHECK(classify(s.spec, s.view, curves[1], 1.0, point1(0.0)).tag == CurveType::TypeII);
    CHECK(classify(s.spec, s.view, curves[2], 1.0, point1(0.0)).tag == CurveType::TypeI);
}

TEST_CASE("classify rejects curves that miss the point") {
    Setup s("log-example");
    Characteristic off = characteristic_from_anchor(s.spec, point1(3.0));
    CHECK_THROWS_AS(classify(s.spec, s.view, off, 2.0, point1(0.4)), PreconditionError);
}

TEST_CASE("classification is stable under re-anchoring") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 2.0, point1(0.4));
    const Characteristic& type1 = curves[2];
    CHECK(classify(s.spec, s.view, type1, 2.0, point1(0.4)).tag == CurveType::TypeI);
    // Same line, classified where it stands at t0/2.
    const double t_half = 1.0;
    CHECK(classify(s.spec, s.view, type1, t_half, type1.position(t_half)).tag ==
          CurveType::TypeI);
}

TEST_CASE("persistence along type-I curves") {
    Setup s("log-example");
    auto curves = through_point(s.spec, s.view, 2.0, point1(0.4));
    PersistenceReport report = persistence_check(s.spec, s.view, curves[2], 2.0, 16);
    CHECK(report.pass);
    CHECK(report.samples.size() == 16);

    // Along the curve from y = +1 into the singular point (1, 0).
    auto at_singular = through_point(s.spec, s.view, 1.0, point1(0.0));
    PersistenceReport from_one = persistence_check(s.spec, s.view, at_singular[2], 1.0, 8);
    CHECK(from_one.pass);

    // Trivial for the static problem.
    Setup z("zero-h");
    Characteristic c = characteristic_from_anchor(z.spec, point1(0.45));
    PersistenceReport zero_report = persistence_check(z.spec, z.view, c, 0.7, 8);
    CHECK(zero_report.pass);
}

TEST_CASE("reachable gradients carry (-H(q), q)") {
    Setup s("log-example");
    auto rg = reachable_gradients(s.spec, s.view, 1.0, point1(0.0));
    REQUIRE(rg.pairs.size() == 2);
    // -H(+-1) = +ln 2: the time component of the gradient is positive, which
    // the finite-difference cross-check below confirms.
    CHECK(rg.pairs[0].p == Approx(std::log(2.0)).margin(1e-4));
    CHECK(rg.pairs[1].p == Approx(std::log(2.0)).margin(1e-4));
    CHECK(rg.pairs[0].q[0] == Approx(-1.0).margin(1e-4));
    CHECK(rg.pairs[1].q[0] == Approx(1.0).margin(1e-4));

    auto checked = reachable_gradients(s.spec, s.view, 1.0, point1(0.0), {}, true);
    CHECK(checked.cross_checked);
    CHECK(checked.samples_used > 0);
    CHECK(checked.samples_matched);
    CHECK(checked.pairs_approached);

    auto at_regular = reachable_gradients(s.spec, s.view, 2.0, point1(0.4));
    REQUIRE(at_regular.pairs.size() == 1);
    CHECK(at_regular.pairs[0].p == Approx(std::log(5.0)).margin(1e-4));
    CHECK(at_regular.pairs[0].q[0] == Approx(2.0).margin(1e-4));

    Setup lin("linear-sigma");
    auto lin_rg = reachable_gradients(lin.spec, lin.view, 0.9, point1(0.4));
    REQUIRE(lin_rg.pairs.size() == 1);
    CHECK(lin_rg.pairs[0].p == Approx(std::log(5.0)));
    CHECK(lin_rg.pairs[0].q[0] == Approx(2.0));
}

TEST_CASE("two-dimensional through_point on the static problem") {
    ProblemSpec spec = catalog_lookup("zero-h");
    spec.dim = 2;
    spec.hamiltonian = [](const Point&) { return 0.0; };
    spec.hamiltonian_grad = [](const Point&) { return Point{0.0, 0.0}; };
    spec.initial = [](const Point& x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
    spec.initial_grad = [](const Point& x) { return x; };
    spec.conjugate_value = nullptr;
    spec.conjugate_subgradient = nullptr;
    ConjugateView view = conjugate_numeric(spec.initial, 2, 3.0, 2.0, 201);
    view.domain_radius = 2.0;
    auto curves = through_point(spec, view, 0.5, Point{0.3, -0.2});
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].anchor_y[0] == Approx(0.3).margin(1e-6));
    CHECK(curves[0].anchor_y[1] == Approx(-0.2).margin(1e-6));
}
