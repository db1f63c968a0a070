#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "hj/expression.hpp"
#include "hj/problem.hpp"

namespace hj {

/// Problem config: `key = value` lines, '#' comments. Either a catalog name
///
///   problem = log-example
///   horizon = 3            # optional overrides
///
/// or an expression-defined problem
///
///   H = -ln(1+p^2)
///   sigma = x^2/2
///   dim = 1
///   horizon = 4
///   lipschitz = 4
///   gamma = 2              # optional
///   semiconcavity = 1      # optional, 1/mu
///
/// Expression problems get central-difference gradients and a numeric
/// conjugate view.
inline ProblemSpec load_problem_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigurationError("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigurationError("config line " + std::to_string(line_no) +
                                     ": empty key or value");
        if (kv.count(key))
            throw ConfigurationError("config: duplicate key '" + key + "'");
        kv[key] = value;
    }

    static const std::map<std::string, int> known = {
        {"problem", 0}, {"H", 0},     {"sigma", 0},         {"dim", 0},
        {"horizon", 0}, {"lipschitz", 0}, {"gamma", 0},     {"semiconcavity", 0}};
    for (const auto& [key, value] : kv)
        if (!known.count(key)) throw ConfigurationError("config: unknown key '" + key + "'");

    auto number = [&](const std::string& key) -> std::optional<double> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        char* end = nullptr;
        const double v = std::strtod(it->second.c_str(), &end);
        if (end == it->second.c_str() || *end != '\0')
            throw ConfigurationError("config: '" + key + "' is not a number: " + it->second);
        return v;
    };

    ProblemSpec spec;
    if (kv.count("problem")) {
        spec = catalog_lookup(kv["problem"]);
        if (auto v = number("horizon")) spec.horizon = *v;
        if (auto v = number("gamma")) spec.semiconvexity_h = *v;
        if (auto v = number("semiconcavity")) spec.semiconcavity_sigma = *v;
        return spec;
    }
    if (!kv.count("H") || !kv.count("sigma"))
        throw ConfigurationError("config needs either 'problem' or both 'H' and 'sigma'");
    const int dim = static_cast<int>(number("dim").value_or(1.0));
    if (dim < 1) throw ConfigurationError("config: dim must be >= 1");
    const auto horizon = number("horizon");
    const auto lipschitz = number("lipschitz");
    if (!horizon || *horizon <= 0.0)
        throw ConfigurationError("config: positive 'horizon' is required");
    if (!lipschitz || *lipschitz <= 0.0)
        throw ConfigurationError("config: positive 'lipschitz' is required");

    Expression h_expr = Expression::parse(kv["H"], 'p', dim);
    Expression s_expr = Expression::parse(kv["sigma"], 'x', dim);
    spec.name = "config";
    spec.dim = dim;
    spec.horizon = *horizon;
    spec.lipschitz_bound = *lipschitz;
    spec.hamiltonian = [h_expr](const Point& p) { return h_expr.eval(p); };
    spec.initial = [s_expr](const Point& x) { return s_expr.eval(x); };
    spec.semiconvexity_h = number("gamma");
    spec.semiconcavity_sigma = number("semiconcavity");
    return spec;
}

/// Catalog name, or a path to a config file.
inline ProblemSpec resolve_problem(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (fs::is_regular_file(name_or_path, ec)) {
        std::ifstream in(name_or_path);
        if (!in) throw ConfigurationError("cannot open config file: " + name_or_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return load_problem_config_text(buf.str());
    }
    return catalog_lookup(name_or_path);
}

}  // namespace hj
