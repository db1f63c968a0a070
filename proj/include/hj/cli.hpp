#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hj/config.hpp"
#include "hj/conjugate.hpp"
#include "hj/characteristics.hpp"
#include "hj/emit.hpp"
#include "hj/hopf.hpp"
#include "hj/regularity.hpp"
#include "hj/singularity.hpp"

namespace hj::cli {

namespace detail {

inline Point parse_point(const std::string& text) {
    Point out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (end == item.c_str()) throw ConfigurationError("bad coordinate list: " + text);
        out.push_back(v);
    }
    if (out.empty()) throw ConfigurationError("empty coordinate list");
    return out;
}

inline std::vector<double> parse_list(const std::string& text) { return parse_point(text); }

inline Point parse_point_dim(const std::string& text, int dim, const char* what) {
    Point p = parse_point(text);
    if (static_cast<int>(p.size()) != dim)
        throw ConfigurationError(std::string(what) + " needs " + std::to_string(dim) +
                                 " coordinate(s), got " + std::to_string(p.size()));
    return p;
}

/// "lo,hi" per axis, axes separated by ';'.
inline Box parse_window(const std::string& text) {
    Box box;
    std::stringstream ss(text);
    std::string axis;
    while (std::getline(ss, axis, ';')) {
        const Point pair = parse_point(axis);
        if (pair.size() != 2) throw ConfigurationError("window axis needs lo,hi: " + text);
        if (pair[0] >= pair[1]) throw ConfigurationError("window axis needs lo < hi: " + text);
        box.lo.push_back(pair[0]);
        box.hi.push_back(pair[1]);
    }
    if (box.lo.empty()) throw ConfigurationError("empty window");
    return box;
}

/// Writes the payload to --out or the given stream; returns bytes written.
inline std::size_t write_output(const std::string& payload, const std::string& out_path,
                                std::ostream& out) {
    if (out_path.empty()) {
        out << payload;
        return payload.size();
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw ConfigurationError("cannot write output file: " + out_path);
    file << payload;
    if (!file) throw ConfigurationError("cannot write output file: " + out_path);
    return payload.size();
}

struct Common {
    std::string problem;
    std::string out_path;
    std::string format = "kv";  // kv | csv (subcommands with CSV payloads ignore it)
    std::uint64_t seed = kDefaultSeed;

    void attach(CLI::App* cmd, bool need_problem = true) {
        auto* opt = cmd->add_option("--problem", problem, "catalog name or config file path");
        if (need_problem) opt->required();
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--format", format, "kv | csv")->check(CLI::IsMember({"kv", "csv"}));
        cmd->add_option("--seed", seed, "seed for sampled audits");
    }
};

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace detail

// ---------------------------------------------------------------------------
// repro cases

namespace detail {

struct GoldenCheck {
    std::ostringstream& os;
    bool ok = true;

    void value(const std::string& key, double got, double expect, double tol) {
        emit_kv(os, key, got);
        if (!(std::fabs(got - expect) <= tol)) {
            ok = false;
            emit_kv(os, key + "_expected", expect);
            emit_kv(os, key + "_status", "mismatch");
        }
    }
    void truth(const std::string& key, bool got, bool expect = true) {
        emit_kv(os, key, bool_text(got));
        if (got != expect) {
            ok = false;
            emit_kv(os, key + "_status", "mismatch");
        }
    }
};

inline int repro_sect5(std::ostringstream& os) {
    GoldenCheck g{os};
    emit_kv(os, "case", "sect5");
    ProblemSpec spec = catalog_lookup("log-example");
    ConjugateView view = make_view(spec);
    SolveOptions opts;

    // Stationary points of the objective at (2, 2/5) via the characteristic
    // root search; the maximum sits at y = 2.
    const double t0 = 2.0;
    const Point x0 = point1(0.4);
    auto curves = through_point(spec, view, t0, x0);
    emit_kv(os, "critical_point_count", static_cast<double>(curves.size()));
    if (curves.size() == 3) {
        const double r11 = std::sqrt(11.0);
        g.value("critical_point_1", curves[0].anchor_y[0], (-4.0 - r11) / 5.0, 1e-6);
        g.value("critical_point_2", curves[1].anchor_y[0], (-4.0 + r11) / 5.0, 1e-6);
        g.value("critical_point_3", curves[2].anchor_y[0], 2.0, 1e-6);
    } else {
        g.ok = false;
    }

    MaximizerSet at_top = evaluate(spec, view, t0, x0, opts);
    g.truth("eval_2_0p4_singleton", at_top.singleton);
    if (!at_top.representatives.empty())
        g.value("eval_2_0p4_maximizer", at_top.representatives.back()[0], 2.0, 1e-6);
    g.value("eval_2_0p4_value", at_top.value, 0.8 - 2.0 + 2.0 * std::log(5.0), 1e-8);

    // Singular maximizers on the segment x = 0.
    for (double t1 : {0.75, 1.0, 1.5}) {
        MaximizerSet ms = evaluate(spec, view, t1, point1(0.0), opts);
        const double root = std::sqrt(2.0 * t1 - 1.0);
        const std::string tag = "ell_t" + format_double(t1);
        g.truth(tag + "_pair", ms.representatives.size() == 2);
        if (ms.representatives.size() == 2) {
            g.value(tag + "_neg", ms.representatives.front()[0], -root, 1e-4);
            g.value(tag + "_pos", ms.representatives.back()[0], root, 1e-4);
        }
    }

    // Differentiability strip.
    StripReport strip = estimate_theta(spec, view, box1(-3.0, 3.0), 12, 201, opts);
    g.value("theta_estimate", strip.theta_estimate, 0.5, 0.01);
    g.value("strip_bound", strip_bound(spec), 0.25, 1e-12);
    g.truth("plane_singleton_at_half",
            plane_singleton_check(spec, view, 0.5, box1(-3.0, 3.0), 201, opts));

    // Type classification at (2, 2/5) and on the singular segment.
    if (curves.size() == 3) {
        g.truth("type_y3_is_II",
                classify(spec, view, curves[0], t0, x0).tag == CurveType::TypeII);
        g.truth("type_y2_is_II",
                classify(spec, view, curves[1], t0, x0).tag == CurveType::TypeII);
        g.truth("type_y1_is_I", classify(spec, view, curves[2], t0, x0).tag == CurveType::TypeI);
        PersistenceReport persist = persistence_check(spec, view, curves[2], t0, 16, opts);
        g.truth("persistence_y1", persist.pass);
    }
    auto curves10 = through_point(spec, view, 1.0, point1(0.0));
    int type1 = 0, type2 = 0;
    for (const auto& c : curves10) {
        if (classify(spec, view, c, 1.0, point1(0.0)).tag == CurveType::TypeI)
            ++type1;
        else
            ++type2;
    }
    g.truth("singular_point_curves", curves10.size() == 3);
    g.truth("singular_point_typeI_pair", type1 == 2);
    g.truth("singular_point_typeII_axis", type2 == 1);

    // Reachable gradients at (1, 0): (-H(q), q) = (ln 2, +-1).
    auto rg = reachable_gradients(spec, view, 1.0, point1(0.0), opts);
    g.truth("reachable_pair_count", rg.pairs.size() == 2);
    if (rg.pairs.size() == 2) {
        g.value("reachable_p", rg.pairs.front().p, std::log(2.0), 1e-4);
        g.value("reachable_q_neg", rg.pairs.front().q[0], -1.0, 1e-4);
        g.value("reachable_q_pos", rg.pairs.back().q[0], 1.0, 1e-4);
    }

    // Forward propagation along the singular segment.
    SingularPath path = trace(spec, view, 0.6, point1(0.0), 0.05, 2.0, 33, opts);
    g.truth("trace_complete", path.complete && !path.propagation_lost);
    double max_abs_x = 0.0, max_diam_err = 0.0;
    for (const auto& node : path.nodes) {
        max_abs_x = std::max(max_abs_x, std::fabs(node.x[0]));
        max_diam_err =
            std::max(max_diam_err, std::fabs(node.diameter - 2.0 * std::sqrt(2.0 * node.t - 1.0)));
    }
    emit_kv(os, "trace_nodes", static_cast<double>(path.nodes.size()));
    g.value("trace_max_abs_x", max_abs_x, 0.0, 0.02);
    g.value("trace_max_diameter_error", max_diam_err, 0.0, 1e-2);

    emit_kv(os, "status", g.ok ? "ok" : "fail");
    return g.ok ? 0 : 1;
}

inline int repro_remark44(std::ostringstream& os) {
    GoldenCheck g{os};
    emit_kv(os, "case", "remark44");
    ProblemSpec spec = catalog_lookup("sqrt-example");
    ConjugateView view = make_view(spec);
    SolveOptions opts;

    const Characteristic c1 = characteristic_from_anchor(spec, point1(1.0));
    const Characteristic c2 = characteristic_from_anchor(spec, point1(2.0));

    // Bisect x(t,1) - x(t,2) on (0, T).
    auto gap = [&](double t) { return c1.position(t)[0] - c2.position(t)[0]; };
    double a = 1e-6, b = spec.horizon - 1e-6;
    if (gap(a) * gap(b) > 0.0) {
        emit_kv(os, "status", "fail");
        emit_kv(os, "error", "no sign change for the crossing bisection");
        return 1;
    }
    for (int iter = 0; iter < 200 && b - a > 1e-14; ++iter) {
        const double mid = 0.5 * (a + b);
        if (gap(a) * gap(mid) <= 0.0) {
            b = mid;
        } else {
            a = mid;
        }
    }
    const double t_cross = 0.5 * (a + b);
    const double x_cross = c1.position(t_cross)[0];
    const double sqrt2 = std::sqrt(2.0), sqrt5 = std::sqrt(5.0), sqrt10 = std::sqrt(10.0);
    g.value("crossing_t", t_cross, sqrt10 / (2.0 * sqrt2 - sqrt5), 1e-6);
    g.value("crossing_x", x_cross, 2.0 * (sqrt2 - sqrt5) / (2.0 * sqrt2 - sqrt5), 1e-6);

    // Differentiability survives around the crossing point.
    bool all_singleton = evaluate(spec, view, t_cross, point1(x_cross), opts).singleton;
    for (int k = 0; k < 8; ++k) {
        const double angle = 2.0 * 3.14159265358979323846 * k / 8.0;
        const double t = t_cross + 0.05 * std::cos(angle);
        const double x = x_cross + 0.05 * std::sin(angle);
        all_singleton = all_singleton && evaluate(spec, view, t, point1(x), opts).singleton;
    }
    g.truth("crossing_neighborhood_singleton", all_singleton);

    emit_kv(os, "status", g.ok ? "ok" : "fail");
    return g.ok ? 0 : 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Single entry point behind the `hj` binary. Exit codes: 0 success, 1 audit
/// failure or golden mismatch, 2 configuration/usage error.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Hopf-formula tools for Hamilton-Jacobi problems u_t + H(Du) = 0"};
    app.require_subcommand(1);

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "value and maximizer set at one (t, x)");
    detail::Common eval_common;
    eval_common.attach(cmd_eval);
    double eval_t = 0.0;
    std::string eval_x;
    cmd_eval->add_option("--t", eval_t, "time in [0, T)")->required();
    cmd_eval->add_option("--x", eval_x, "point, comma separated")->required();

    // field
    auto* cmd_field = app.add_subcommand("field", "tabulate u over a (t, x) grid as CSV");
    detail::Common field_common;
    field_common.attach(cmd_field);
    std::string field_t, field_window;
    std::string field_nodes = "101";
    cmd_field->add_option("--t", field_t, "comma-separated t levels")->required();
    cmd_field->add_option("--window", field_window, "x window lo,hi per axis; axes ';'-separated")
        ->required();
    cmd_field->add_option("--nodes", field_nodes, "grid nodes per axis");

    // conjugate
    auto* cmd_conj = app.add_subcommand("conjugate", "emit (q, sigma*(q)) CSV over a window");
    detail::Common conj_common;
    conj_common.attach(cmd_conj);
    double conj_window = 0.0;
    int conj_nodes = 201;
    cmd_conj->add_option("--window", conj_window, "half-width of the q window")->required();
    cmd_conj->add_option("--nodes", conj_nodes, "number of q samples");

    // char
    auto* cmd_char = app.add_subcommand("char", "characteristics through (t0, x0)");
    detail::Common char_common;
    char_common.attach(cmd_char);
    double char_t0 = 0.0;
    std::string char_x0;
    cmd_char->add_option("--t0", char_t0)->required();
    cmd_char->add_option("--x0", char_x0)->required();

    // classify
    auto* cmd_classify = app.add_subcommand("classify", "type of the curve from anchor y at (t0, x0)");
    detail::Common classify_common;
    classify_common.attach(cmd_classify);
    double classify_t0 = 0.0;
    std::string classify_x0, classify_y;
    cmd_classify->add_option("--t0", classify_t0)->required();
    cmd_classify->add_option("--x0", classify_x0)->required();
    cmd_classify->add_option("--y", classify_y, "anchor point of the curve")->required();

    // persist
    auto* cmd_persist = app.add_subcommand("persist", "type-(I) persistence below t0");
    detail::Common persist_common;
    persist_common.attach(cmd_persist);
    double persist_t0 = 0.0;
    std::string persist_y;
    int persist_steps = 16;
    cmd_persist->add_option("--t0", persist_t0)->required();
    cmd_persist->add_option("--y", persist_y, "anchor point of the curve")->required();
    cmd_persist->add_option("--steps", persist_steps);

    // strip
    auto* cmd_strip = app.add_subcommand("strip", "estimate the C^1 strip height");
    detail::Common strip_common;
    strip_common.attach(cmd_strip);
    std::string strip_window = "-3,3";
    int strip_nodes = 201, strip_levels = 12;
    cmd_strip->add_option("--window", strip_window, "x window lo,hi");
    cmd_strip->add_option("--x-nodes", strip_nodes);
    cmd_strip->add_option("--levels", strip_levels, "bisection iterations");

    // check
    auto* cmd_check = app.add_subcommand("check", "strip condition audits at a level t*");
    detail::Common check_common;
    check_common.attach(cmd_check);
    double check_tstar = 0.0;
    std::string check_window = "-3,3";
    int check_nodes = 41, check_samples = 64;
    cmd_check->add_option("--t-star", check_tstar)->required();
    cmd_check->add_option("--window", check_window, "x window lo,hi");
    cmd_check->add_option("--nodes", check_nodes, "x nodes for the audits");
    cmd_check->add_option("--crossing-samples", check_samples);

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "numeric viscosity-solution audit");
    detail::Common verify_common;
    verify_common.attach(cmd_verify);
    std::string verify_window = "-2.5,2.5";
    int verify_samples = 50;
    double verify_h = 1e-4;
    std::vector<std::string> verify_include;
    cmd_verify->add_option("--window", verify_window, "x window lo,hi");
    cmd_verify->add_option("--samples", verify_samples);
    cmd_verify->add_option("--step", verify_h, "finite-difference step h");
    cmd_verify->add_option("--include", verify_include, "extra t,x points (repeatable)");

    // trace
    auto* cmd_trace = app.add_subcommand("trace", "trace forward singularity propagation");
    detail::Common trace_common;
    trace_common.attach(cmd_trace);
    double trace_t0 = 0.0, trace_eps = 0.05, trace_tend = 0.0;
    std::string trace_x0;
    cmd_trace->add_option("--t0", trace_t0)->required();
    cmd_trace->add_option("--x0", trace_x0)->required();
    cmd_trace->add_option("--eps", trace_eps, "spatial search radius per step");
    cmd_trace->add_option("--t-end", trace_tend)->required();

    // repro
    auto* cmd_repro = app.add_subcommand("repro", "recompute built-in golden cases");
    detail::Common repro_common;
    repro_common.attach(cmd_repro, /*need_problem=*/false);
    std::string repro_case;
    cmd_repro->add_option("--case", repro_case, "sect5 | remark44")
        ->required()
        ->check(CLI::IsMember({"sect5", "remark44"}));

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        std::ostringstream payload;
        int code = 0;

        if (*cmd_eval) {
            ProblemSpec spec = resolve_problem(eval_common.problem);
            ConjugateView view = make_view(spec);
            MaximizerSet ms = evaluate(spec, view, eval_t, detail::parse_point_dim(eval_x, spec.dim, "--x"));
            emit_kv(payload, "t", ms.t);
            emit_kv(payload, "x", format_point(ms.x));
            emit_kv(payload, "u", ms.value);
            std::string reps;
            for (std::size_t i = 0; i < ms.representatives.size(); ++i)
                reps += (i ? ";" : "") + format_point(ms.representatives[i]);
            emit_kv(payload, "representatives", reps);
            emit_kv(payload, "diameter", ms.diameter);
            emit_kv(payload, "singleton", detail::bool_text(ms.singleton));
            detail::write_output(payload.str(), eval_common.out_path, out);
            return 0;
        }

        if (*cmd_field) {
            ProblemSpec spec = resolve_problem(field_common.problem);
            ConjugateView view = make_view(spec);
            const Box window = detail::parse_window(field_window);
            if (window.dim() != spec.dim)
                throw ConfigurationError("--window axis count must match the problem dimension");
            std::vector<int> nodes;
            for (double v : detail::parse_list(field_nodes)) nodes.push_back(static_cast<int>(v));
            while (static_cast<int>(nodes.size()) < window.dim()) nodes.push_back(nodes.back());
            for (int n : nodes)
                if (n < 3) throw ConfigurationError("--nodes must be >= 3 per axis");
            FieldTable table = field(spec, view, detail::parse_list(field_t), window, nodes);
            std::vector<std::string> header{"t"};
            for (int d = 1; d <= window.dim(); ++d) header.push_back("x" + std::to_string(d));
            header.push_back("u");
            header.push_back("diam");
            header.push_back("singleton");
            CsvWriter csv(payload, header);
            for (const auto& row : table.rows) {
                std::vector<std::string> cells{format_double(row.t)};
                for (double xv : row.x) cells.push_back(format_double(xv));
                cells.push_back(format_double(row.u));
                cells.push_back(format_double(row.diameter));
                cells.push_back(row.singleton ? "1" : "0");
                csv.row(cells);
            }
            detail::write_output(payload.str(), field_common.out_path, out);
            return 0;
        }

        if (*cmd_conj) {
            ProblemSpec spec = resolve_problem(conj_common.problem);
            ConjugateView view = make_view(spec);
            if (conj_nodes < 3) throw ConfigurationError("--nodes must be >= 3");
            CsvWriter csv(payload, {"q", "sigma_star"});
            Point q(1);
            for (double qv : linspace(-conj_window, conj_window, conj_nodes)) {
                q[0] = qv;
                csv.row({format_double(qv), format_double(view.value(q))});
            }
            detail::write_output(payload.str(), conj_common.out_path, out);
            return 0;
        }

        if (*cmd_char) {
            ProblemSpec spec = resolve_problem(char_common.problem);
            ConjugateView view = make_view(spec);
            const Point x0 = detail::parse_point_dim(char_x0, spec.dim, "--x0");
            auto curves = through_point(spec, view, char_t0, x0);
            CsvWriter csv(payload, {"y", "p", "velocity", "type"});
            for (const auto& c : curves) {
                TypeTag tag = classify(spec, view, c, char_t0, x0);
                csv.row({format_point(c.anchor_y), format_point(c.momentum),
                         format_point(c.velocity), curve_type_name(tag.tag)});
            }
            detail::write_output(payload.str(), char_common.out_path, out);
            return 0;
        }

        if (*cmd_classify) {
            ProblemSpec spec = resolve_problem(classify_common.problem);
            ConjugateView view = make_view(spec);
            const Characteristic c = characteristic_from_anchor(
                spec, detail::parse_point_dim(classify_y, spec.dim, "--y"));
            TypeTag tag = classify(spec, view, c, classify_t0,
                                   detail::parse_point_dim(classify_x0, spec.dim, "--x0"));
            emit_kv(payload, "y", format_point(c.anchor_y));
            emit_kv(payload, "momentum", format_point(c.momentum));
            emit_kv(payload, "velocity", format_point(c.velocity));
            emit_kv(payload, "type", curve_type_name(tag.tag));
            detail::write_output(payload.str(), classify_common.out_path, out);
            return 0;
        }

        if (*cmd_persist) {
            ProblemSpec spec = resolve_problem(persist_common.problem);
            ConjugateView view = make_view(spec);
            const Characteristic c = characteristic_from_anchor(
                spec, detail::parse_point_dim(persist_y, spec.dim, "--y"));
            PersistenceReport report = persistence_check(spec, view, c, persist_t0, persist_steps);
            emit_kv(payload, "t0", persist_t0);
            emit_kv(payload, "x0", format_point(c.position(persist_t0)));
            emit_kv(payload, "steps", static_cast<double>(report.samples.size()));
            emit_kv(payload, "pass", detail::bool_text(report.pass));
            if (!report.pass) emit_kv(payload, "first_violation", report.first_violation);
            detail::write_output(payload.str(), persist_common.out_path, out);
            return report.pass ? 0 : 1;
        }

        if (*cmd_strip) {
            ProblemSpec spec = resolve_problem(strip_common.problem);
            ConjugateView view = make_view(spec);
            if (strip_nodes < 3) throw ConfigurationError("--x-nodes must be >= 3");
            const Box window = detail::parse_window(strip_window);
            StripReport report = estimate_theta(spec, view, window, strip_levels, strip_nodes);
            // Aligned text by default; key-value records on request.
            if (cmd_strip->count("--format") > 0 && strip_common.format == "kv") {
                emit_kv(payload, "theta_estimate", report.theta_estimate);
                if (report.theoretical_bound)
                    emit_kv(payload, "theoretical_bound", *report.theoretical_bound);
                emit_kv(payload, "window", format_point(window.lo) + ".." + format_point(window.hi));
                emit_kv(payload, "x_nodes", static_cast<double>(report.x_nodes));
                emit_kv(payload, "levels", static_cast<double>(report.levels));
                emit_kv(payload, "level_resolution", report.level_resolution);
                if (report.witness) {
                    emit_kv(payload, "witness_t", report.witness->t);
                    emit_kv(payload, "witness_x", format_point(report.witness->x));
                }
                emit_kv(payload, "no_witness_in_window",
                        detail::bool_text(report.no_witness_in_window));
            } else {
                payload << "theta estimate      " << format_double(report.theta_estimate) << "\n";
                if (report.theoretical_bound)
                    payload << "theoretical bound   " << format_double(*report.theoretical_bound)
                            << "\n";
                payload << "window              [" << format_point(window.lo) << ", "
                        << format_point(window.hi) << "] with " << report.x_nodes << " nodes\n";
                payload << "level resolution    " << format_double(report.level_resolution) << "\n";
                if (report.witness)
                    payload << "first witness       (t=" << format_double(report.witness->t)
                            << ", x=" << format_point(report.witness->x) << ")\n";
                else
                    payload << "first witness       none found in window\n";
            }
            detail::write_output(payload.str(), strip_common.out_path, out);
            return 0;
        }

        if (*cmd_check) {
            ProblemSpec spec = resolve_problem(check_common.problem);
            ConjugateView view = make_view(spec);
            if (check_nodes < 3) throw ConfigurationError("--nodes must be >= 3");
            const Box window = detail::parse_window(check_window);
            const bool inj = injectivity_check(spec, check_tstar, window, check_nodes);
            const bool plane = plane_singleton_check(spec, view, check_tstar, window, check_nodes);
            const bool type1 = all_type_one_check(spec, view, check_tstar, window, check_nodes);
            Region region{0.05 * check_tstar, 0.95 * check_tstar, window};
            CrossingReport crossings = crossing_check(spec, view, region, check_samples);
            emit_kv(payload, "t_star", check_tstar);
            emit_kv(payload, "injectivity", detail::bool_text(inj));
            emit_kv(payload, "plane_singleton", detail::bool_text(plane));
            emit_kv(payload, "all_type_one", detail::bool_text(type1));
            emit_kv(payload, "crossings_found", static_cast<double>(crossings.crossings.size()));
            emit_kv(payload, "crossing_points_checked",
                    static_cast<double>(crossings.points_checked));
            const bool ok = inj && plane && type1 && crossings.none();
            emit_kv(payload, "pass", detail::bool_text(ok));
            detail::write_output(payload.str(), check_common.out_path, out);
            return ok ? 0 : 1;
        }

        if (*cmd_verify) {
            ProblemSpec spec = resolve_problem(verify_common.problem);
            ConjugateView view = make_view(spec);
            const Box window = detail::parse_window(verify_window);
            std::vector<std::pair<double, Point>> extra;
            for (const auto& text : verify_include) {
                Point tx = detail::parse_point(text);
                if (static_cast<int>(tx.size()) != 1 + spec.dim)
                    throw ConfigurationError("--include needs t,x1..xn: " + text);
                extra.emplace_back(tx[0], Point(tx.begin() + 1, tx.end()));
            }
            if (verify_h <= 0.0) throw ConfigurationError("--step must be positive");
            ViscosityReport report = viscosity_audit(spec, view, window, verify_samples, verify_h,
                                                     verify_common.seed, extra);
            emit_kv(payload, "h", report.h);
            emit_kv(payload, "regular_points", static_cast<double>(report.regular_count));
            emit_kv(payload, "singular_points", static_cast<double>(report.singular_count));
            emit_kv(payload, "max_residual", report.max_residual);
            if (report.singular_count > 0) emit_kv(payload, "min_margin", report.min_margin);
            for (const auto& row : report.rows) {
                const std::string at = "_t" + format_double(row.t) + "_x" + format_point(row.x);
                if (!row.regular && row.note.empty()) emit_kv(payload, "alpha" + at, row.alpha);
                if (!row.note.empty()) emit_kv(payload, "note" + at, row.note);
            }
            emit_kv(payload, "pass", detail::bool_text(report.pass));
            detail::write_output(payload.str(), verify_common.out_path, out);
            return report.pass ? 0 : 1;
        }

        if (*cmd_trace) {
            ProblemSpec spec = resolve_problem(trace_common.problem);
            ConjugateView view = make_view(spec);
            SingularPath path = trace(spec, view, trace_t0,
                                      detail::parse_point_dim(trace_x0, spec.dim, "--x0"),
                                      trace_eps, trace_tend);
            std::vector<std::string> header{"k", "t"};
            for (int d = 1; d <= spec.dim; ++d) header.push_back("x" + std::to_string(d));
            header.push_back("diameter");
            CsvWriter csv(payload, header);
            for (std::size_t k = 0; k < path.nodes.size(); ++k) {
                std::vector<std::string> cells{std::to_string(k), format_double(path.nodes[k].t)};
                for (double xv : path.nodes[k].x) cells.push_back(format_double(xv));
                cells.push_back(format_double(path.nodes[k].diameter));
                csv.row(cells);
            }
            detail::write_output(payload.str(), trace_common.out_path, out);
            return path.propagation_lost ? 1 : 0;
        }

        if (*cmd_repro) {
            if (repro_case == "sect5") {
                code = detail::repro_sect5(payload);
            } else {
                code = detail::repro_remark44(payload);
            }
            detail::write_output(payload.str(), repro_common.out_path, out);
            return code;
        }

        err << app.help();
        return 2;
    } catch (const ConfigurationError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const LookupError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        err << "precondition error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

inline int run_main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace hj::cli
