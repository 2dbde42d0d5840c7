#pragma once

// Formula language for metric components G(uhat, vhat).
//
// Grammar (no implicit multiplication, '^' right-associative):
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := '-' unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name '(' expr ')' | name | '(' expr ')'
// Variables: uhat, vhat (aliases u1, u2).
// Functions: exp, log, sin, cos, cosh, sinh, sqrt.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isoembed/numerics.hpp"

namespace isoembed {

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}
    size_t offset() const { return offset_; }

private:
    size_t offset_;
};

class eval_error : public std::runtime_error {
public:
    eval_error(const std::string& what, const std::string& subexpr)
        : std::runtime_error(what + " in subexpression '" + subexpr + "'"),
          subexpr_(subexpr) {}
    const std::string& subexpression() const { return subexpr_; }

private:
    std::string subexpr_;
};

enum class ExprVar { Uhat = 0, Vhat = 1 };

namespace detail {

enum class NodeKind { Number, Var, Add, Sub, Mul, Div, Pow, Neg, Func };
enum class FuncId { Exp, Log, Sin, Cos, Cosh, Sinh, Sqrt };

inline const char* func_name(FuncId f) {
    switch (f) {
        case FuncId::Exp: return "exp";
        case FuncId::Log: return "log";
        case FuncId::Sin: return "sin";
        case FuncId::Cos: return "cos";
        case FuncId::Cosh: return "cosh";
        case FuncId::Sinh: return "sinh";
        case FuncId::Sqrt: return "sqrt";
    }
    return "?";
}

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double number = 0.0;   // Number
    ExprVar var = ExprVar::Uhat;
    FuncId func = FuncId::Exp;
    NodePtr a, b;
};

inline NodePtr make_number(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Number;
    n->number = v;
    return n;
}

inline NodePtr make_var(ExprVar v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Var;
    n->var = v;
    return n;
}

inline NodePtr make_unary(NodeKind k, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
}

inline NodePtr make_func(FuncId f, NodePtr a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Func;
    n->func = f;
    n->a = std::move(a);
    return n;
}

inline bool is_number(const NodePtr& n, double v) {
    return n->kind == NodeKind::Number && n->number == v;
}

inline NodePtr make_binary(NodeKind k, NodePtr a, NodePtr b) {
    // Light constant folding keeps derivative trees small.
    if (a->kind == NodeKind::Number && b->kind == NodeKind::Number) {
        const double x = a->number, y = b->number;
        switch (k) {
            case NodeKind::Add: return make_number(x + y);
            case NodeKind::Sub: return make_number(x - y);
            case NodeKind::Mul: return make_number(x * y);
            case NodeKind::Div:
                if (y != 0.0) return make_number(x / y);
                break;
            case NodeKind::Pow: {
                double r = std::pow(x, y);
                if (std::isfinite(r)) return make_number(r);
                break;
            }
            default: break;
        }
    }
    switch (k) {
        case NodeKind::Add:
            if (is_number(a, 0.0)) return b;
            if (is_number(b, 0.0)) return a;
            break;
        case NodeKind::Sub:
            if (is_number(b, 0.0)) return a;
            if (is_number(a, 0.0)) return make_unary(NodeKind::Neg, b);
            break;
        case NodeKind::Mul:
            if (is_number(a, 0.0) || is_number(b, 0.0)) return make_number(0.0);
            if (is_number(a, 1.0)) return b;
            if (is_number(b, 1.0)) return a;
            break;
        case NodeKind::Div:
            if (is_number(a, 0.0)) return make_number(0.0);
            if (is_number(b, 1.0)) return a;
            break;
        case NodeKind::Pow:
            if (is_number(b, 1.0)) return a;
            if (is_number(b, 0.0)) return make_number(1.0);
            break;
        default: break;
    }
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

inline void render(const NodePtr& n, std::string& out) {
    switch (n->kind) {
        case NodeKind::Number: {
            if (n->number < 0) {
                out += '(';
                out += format_double(n->number);
                out += ')';
            } else {
                out += format_double(n->number);
            }
            break;
        }
        case NodeKind::Var: out += (n->var == ExprVar::Uhat ? "uhat" : "vhat"); break;
        case NodeKind::Neg:
            out += "(-";
            render(n->a, out);
            out += ')';
            break;
        case NodeKind::Func:
            out += func_name(n->func);
            out += '(';
            render(n->a, out);
            out += ')';
            break;
        default: {
            char op = '?';
            switch (n->kind) {
                case NodeKind::Add: op = '+'; break;
                case NodeKind::Sub: op = '-'; break;
                case NodeKind::Mul: op = '*'; break;
                case NodeKind::Div: op = '/'; break;
                case NodeKind::Pow: op = '^'; break;
                default: break;
            }
            out += '(';
            render(n->a, out);
            out += op;
            render(n->b, out);
            out += ')';
        }
    }
}

inline std::string render(const NodePtr& n) {
    std::string out;
    render(n, out);
    return out;
}

[[noreturn]] inline void eval_fail(const char* what, const NodePtr& n) {
    throw eval_error(what, render(n));
}

inline bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

inline double eval(const NodePtr& n, double uhat, double vhat) {
    switch (n->kind) {
        case NodeKind::Number: return n->number;
        case NodeKind::Var: return n->var == ExprVar::Uhat ? uhat : vhat;
        case NodeKind::Neg: return -eval(n->a, uhat, vhat);
        case NodeKind::Add: return eval(n->a, uhat, vhat) + eval(n->b, uhat, vhat);
        case NodeKind::Sub: return eval(n->a, uhat, vhat) - eval(n->b, uhat, vhat);
        case NodeKind::Mul: return eval(n->a, uhat, vhat) * eval(n->b, uhat, vhat);
        case NodeKind::Div: {
            const double num = eval(n->a, uhat, vhat);
            const double den = eval(n->b, uhat, vhat);
            if (den == 0.0) eval_fail("division by zero", n);
            return num / den;
        }
        case NodeKind::Pow: {
            const double base = eval(n->a, uhat, vhat);
            const double ex = eval(n->b, uhat, vhat);
            if (base < 0.0 && !is_integer(ex)) eval_fail("negative base with non-integer exponent", n);
            if (base == 0.0 && ex < 0.0) eval_fail("zero base with negative exponent", n);
            return std::pow(base, ex);
        }
        case NodeKind::Func: {
            const double x = eval(n->a, uhat, vhat);
            switch (n->func) {
                case FuncId::Exp: return std::exp(x);
                case FuncId::Log:
                    if (x <= 0.0) eval_fail("log of non-positive value", n);
                    return std::log(x);
                case FuncId::Sin: return std::sin(x);
                case FuncId::Cos: return std::cos(x);
                case FuncId::Cosh: return std::cosh(x);
                case FuncId::Sinh: return std::sinh(x);
                case FuncId::Sqrt:
                    if (x < 0.0) eval_fail("sqrt of negative value", n);
                    return std::sqrt(x);
            }
            eval_fail("unknown function", n);
        }
    }
    eval_fail("malformed expression node", n);
}

inline NodePtr derive(const NodePtr& n, ExprVar var) {
    using K = NodeKind;
    switch (n->kind) {
        case K::Number: return make_number(0.0);
        case K::Var: return make_number(n->var == var ? 1.0 : 0.0);
        case K::Neg: return make_unary(K::Neg, derive(n->a, var));
        case K::Add: return make_binary(K::Add, derive(n->a, var), derive(n->b, var));
        case K::Sub: return make_binary(K::Sub, derive(n->a, var), derive(n->b, var));
        case K::Mul:
            return make_binary(K::Add,
                               make_binary(K::Mul, derive(n->a, var), n->b),
                               make_binary(K::Mul, n->a, derive(n->b, var)));
        case K::Div:
            // (a/b)' = (a'b - ab') / b^2
            return make_binary(
                K::Div,
                make_binary(K::Sub,
                            make_binary(K::Mul, derive(n->a, var), n->b),
                            make_binary(K::Mul, n->a, derive(n->b, var))),
                make_binary(K::Pow, n->b, make_number(2.0)));
        case K::Pow: {
            if (n->b->kind == K::Number) {
                // (f^c)' = c f^(c-1) f'
                const double c = n->b->number;
                return make_binary(
                    K::Mul, make_number(c),
                    make_binary(K::Mul,
                                make_binary(K::Pow, n->a, make_number(c - 1.0)),
                                derive(n->a, var)));
            }
            // f^g = exp(g log f):  (f^g)' = f^g (g' log f + g f'/f)
            auto fg = make_binary(K::Pow, n->a, n->b);
            auto term1 = make_binary(K::Mul, derive(n->b, var), make_func(FuncId::Log, n->a));
            auto term2 = make_binary(K::Div, make_binary(K::Mul, n->b, derive(n->a, var)), n->a);
            return make_binary(K::Mul, fg, make_binary(K::Add, term1, term2));
        }
        case K::Func: {
            NodePtr inner = derive(n->a, var);
            NodePtr outer;
            switch (n->func) {
                case FuncId::Exp: outer = make_func(FuncId::Exp, n->a); break;
                case FuncId::Log: outer = make_binary(K::Div, make_number(1.0), n->a); break;
                case FuncId::Sin: outer = make_func(FuncId::Cos, n->a); break;
                case FuncId::Cos: outer = make_unary(K::Neg, make_func(FuncId::Sin, n->a)); break;
                case FuncId::Cosh: outer = make_func(FuncId::Sinh, n->a); break;
                case FuncId::Sinh: outer = make_func(FuncId::Cosh, n->a); break;
                case FuncId::Sqrt:
                    outer = make_binary(K::Div, make_number(0.5), make_func(FuncId::Sqrt, n->a));
                    break;
            }
            return make_binary(K::Mul, outer, inner);
        }
    }
    throw std::logic_error("derive: malformed node");
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        skip_ws();
        if (pos_ >= text_.size()) throw parse_error("empty formula", 0);
        NodePtr e = parse_expr();
        skip_ws();
        if (pos_ < text_.size())
            throw parse_error(std::string("unexpected character '") + text_[pos_] + "'", pos_);
        return e;
    }

private:
    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            if (accept('+')) lhs = make_binary(NodeKind::Add, lhs, parse_term());
            else if (accept('-')) lhs = make_binary(NodeKind::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            skip_ws();
            if (accept('*')) lhs = make_binary(NodeKind::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = make_binary(NodeKind::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    NodePtr parse_unary() {
        skip_ws();
        if (accept('-')) return make_unary(NodeKind::Neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        skip_ws();
        if (accept('^')) return make_binary(NodeKind::Pow, base, parse_unary());
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw parse_error("unexpected end of formula", pos_);
        const char c = text_[pos_];
        if (accept('(')) {
            NodePtr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        throw parse_error(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        // optional exponent part
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            size_t save = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            } else {
                pos_ = save;  // 'e' belongs to something else; not a valid exponent
            }
        }
        const std::string tok(text_.substr(start, pos_ - start));
        try {
            size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw parse_error("malformed number '" + tok + "'", start);
            return make_number(v);
        } catch (const std::invalid_argument&) {
            throw parse_error("malformed number '" + tok + "'", start);
        }
    }

    NodePtr parse_name() {
        size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        if (name == "uhat" || name == "u1") return make_var(ExprVar::Uhat);
        if (name == "vhat" || name == "u2") return make_var(ExprVar::Vhat);
        static const std::pair<const char*, FuncId> funcs[] = {
            {"exp", FuncId::Exp},   {"log", FuncId::Log},  {"sin", FuncId::Sin},
            {"cos", FuncId::Cos},   {"cosh", FuncId::Cosh}, {"sinh", FuncId::Sinh},
            {"sqrt", FuncId::Sqrt},
        };
        for (auto [fname, fid] : funcs) {
            if (name == fname) {
                skip_ws();
                expect('(');
                NodePtr arg = parse_expr();
                expect(')');
                return make_func(fid, arg);
            }
        }
        throw parse_error("unknown identifier '" + name + "'", start);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (!accept(c)) throw parse_error(std::string("expected '") + c + "'", pos_);
    }

    std::string_view text_;
    size_t pos_ = 0;
};

} // namespace detail

// Immutable formula in (uhat, vhat); evaluation is reentrant.
class Expression {
public:
    static Expression parse(std::string_view text) {
        return Expression(detail::Parser(text).parse());
    }
    static Expression constant(double v) { return Expression(detail::make_number(v)); }
    static Expression variable(ExprVar v) { return Expression(detail::make_var(v)); }

    double operator()(double uhat, double vhat) const {
        double v = detail::eval(root_, uhat, vhat);
        if (!std::isfinite(v)) throw eval_error("non-finite value", detail::render(root_));
        return v;
    }
    double operator()(Vec2 p) const { return (*this)(p.x, p.y); }

    Expression derivative(ExprVar var) const { return Expression(detail::derive(root_, var)); }

    Expression sqrt() const { return Expression(detail::make_func(detail::FuncId::Sqrt, root_)); }

    std::string str() const { return detail::render(root_); }

    bool is_constant() const { return root_->kind == detail::NodeKind::Number; }
    bool is_constant(double v) const { return detail::is_number(root_, v); }

private:
    explicit Expression(detail::NodePtr root) : root_(std::move(root)) {}
    detail::NodePtr root_;
};

} // namespace isoembed
