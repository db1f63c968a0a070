#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "hj/errors.hpp"

namespace hj {

/// Minimal arithmetic-expression grammar for problem configs:
/// binary + - * / ^ (right-assoc), unary minus, ln/exp/sqrt/abs and binary
/// min/max, numeric literals, constants pi and e, and one variable letter
/// with optional 1-based component index (x, x1..xn or p, p1..pn).
class Expression {
public:
    /// Parses `text` with variables named by `var_letter`. Throws
    /// ConfigurationError on malformed input.
    static Expression parse(const std::string& text, char var_letter, int dim);

    double eval(const std::vector<double>& vars) const { return eval_node(*root_, vars); }

    const std::string& text() const { return text_; }

private:
    enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Ln, Exp, Sqrt, Abs, Min, Max };

    struct Node {
        Kind kind;
        double value = 0.0;  // Constant
        int index = 0;       // Variable component
        std::unique_ptr<Node> a, b;
    };

    struct Parser {
        const std::string& s;
        std::size_t pos = 0;
        char var_letter;
        int dim;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        [[noreturn]] void fail(const std::string& what) const {
            throw ConfigurationError("expression error at offset " + std::to_string(pos) +
                                     " in '" + s + "': " + what);
        }

        std::unique_ptr<Node> make(Kind k, std::unique_ptr<Node> a = nullptr,
                                   std::unique_ptr<Node> b = nullptr) {
            auto n = std::make_unique<Node>();
            n->kind = k;
            n->a = std::move(a);
            n->b = std::move(b);
            return n;
        }

        std::unique_ptr<Node> expr() {
            auto lhs = term();
            for (;;) {
                if (eat('+')) {
                    lhs = make(Kind::Add, std::move(lhs), term());
                } else if (eat('-')) {
                    lhs = make(Kind::Sub, std::move(lhs), term());
                } else {
                    return lhs;
                }
            }
        }

        std::unique_ptr<Node> term() {
            auto lhs = factor();
            for (;;) {
                if (eat('*')) {
                    lhs = make(Kind::Mul, std::move(lhs), factor());
                } else if (eat('/')) {
                    lhs = make(Kind::Div, std::move(lhs), factor());
                } else {
                    return lhs;
                }
            }
        }

        // Unary minus binds looser than '^' (so -x^2 is -(x^2)); '^' is
        // right-associative with a possibly signed exponent (2^-x).
        std::unique_ptr<Node> factor() {
            if (eat('-')) return make(Kind::Neg, factor());
            return power();
        }

        std::unique_ptr<Node> power() {
            auto base = primary();
            if (eat('^')) return make(Kind::Pow, std::move(base), factor());
            return base;
        }

        std::unique_ptr<Node> primary() {
            skip_ws();
            if (pos >= s.size()) fail("unexpected end of input");
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
            if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
            if (eat('(')) {
                auto inner = expr();
                if (!eat(')')) fail("expected ')'");
                return inner;
            }
            fail(std::string("unexpected character '") + c + "'");
        }

        std::unique_ptr<Node> number() {
            const char* begin = s.c_str() + pos;
            char* end = nullptr;
            double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos += static_cast<std::size_t>(end - begin);
            auto n = make(Kind::Constant);
            n->value = v;
            return n;
        }

        std::unique_ptr<Node> identifier() {
            std::size_t start = pos;
            while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])))) ++pos;
            std::string name = s.substr(start, pos - start);
            if (eat('(')) {
                Kind k;
                bool binary = false;
                if (name == "ln") {
                    k = Kind::Ln;
                } else if (name == "exp") {
                    k = Kind::Exp;
                } else if (name == "sqrt") {
                    k = Kind::Sqrt;
                } else if (name == "abs") {
                    k = Kind::Abs;
                } else if (name == "min") {
                    k = Kind::Min;
                    binary = true;
                } else if (name == "max") {
                    k = Kind::Max;
                    binary = true;
                } else {
                    fail("unknown function '" + name + "'");
                }
                auto a = expr();
                std::unique_ptr<Node> b;
                if (binary) {
                    if (!eat(',')) fail("'" + name + "' takes two arguments");
                    b = expr();
                }
                if (!eat(')')) fail("expected ')'");
                return make(k, std::move(a), std::move(b));
            }
            if (name == "pi") {
                auto n = make(Kind::Constant);
                n->value = 3.14159265358979323846;
                return n;
            }
            if (name == "e") {
                auto n = make(Kind::Constant);
                n->value = 2.71828182845904523536;
                return n;
            }
            if (name[0] == var_letter) {
                int index = 0;
                if (name.size() > 1) {
                    for (std::size_t i = 1; i < name.size(); ++i) {
                        if (!std::isdigit(static_cast<unsigned char>(name[i])))
                            fail("unknown identifier '" + name + "'");
                    }
                    index = std::atoi(name.c_str() + 1) - 1;
                }
                if (index < 0 || index >= dim)
                    fail("variable '" + name + "' out of range for dim " + std::to_string(dim));
                auto n = make(Kind::Variable);
                n->index = index;
                return n;
            }
            fail("unknown identifier '" + name + "'");
        }
    };

    static double eval_node(const Node& n, const std::vector<double>& vars) {
        switch (n.kind) {
            case Kind::Constant: return n.value;
            case Kind::Variable: return vars[static_cast<std::size_t>(n.index)];
            case Kind::Add: return eval_node(*n.a, vars) + eval_node(*n.b, vars);
            case Kind::Sub: return eval_node(*n.a, vars) - eval_node(*n.b, vars);
            case Kind::Mul: return eval_node(*n.a, vars) * eval_node(*n.b, vars);
            case Kind::Div: return eval_node(*n.a, vars) / eval_node(*n.b, vars);
            case Kind::Pow: return std::pow(eval_node(*n.a, vars), eval_node(*n.b, vars));
            case Kind::Neg: return -eval_node(*n.a, vars);
            case Kind::Ln: return std::log(eval_node(*n.a, vars));
            case Kind::Exp: return std::exp(eval_node(*n.a, vars));
            case Kind::Sqrt: return std::sqrt(eval_node(*n.a, vars));
            case Kind::Abs: return std::fabs(eval_node(*n.a, vars));
            case Kind::Min: return std::min(eval_node(*n.a, vars), eval_node(*n.b, vars));
            case Kind::Max: return std::max(eval_node(*n.a, vars), eval_node(*n.b, vars));
        }
        return 0.0;
    }

    std::shared_ptr<const Node> root_;
    std::string text_;
};

inline Expression Expression::parse(const std::string& text, char var_letter, int dim) {
    Parser p{text, 0, var_letter, dim};
    auto root = p.expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    Expression e;
    e.root_ = std::shared_ptr<const Node>(root.release());
    e.text_ = text;
    return e;
}

}  // namespace hj
