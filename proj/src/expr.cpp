// SPDX-License-Identifier: Apache-2.0
#include "mustructure/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace mustructure::expr {

namespace {

NodePtr make_const(double v, const char* name = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = v;
    n->name = name;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->var = v;
    return n;
}

NodePtr make_node(Op op, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::Const; }

const char* function_name(Op op) {
    switch (op) {
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::Sqrt: return "sqrt";
        case Op::Abs: return "abs";
        case Op::Log: return "log";
        default: return nullptr;
    }
}

[[noreturn]] void domain_error(const char* what) { throw Error(ErrorKind::DomainError, what); }

double eval_node(const Node& n, const Vec3& p) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Var: return p[static_cast<int>(n.var)];
        case Op::Add: return eval_node(*n.lhs, p) + eval_node(*n.rhs, p);
        case Op::Sub: return eval_node(*n.lhs, p) - eval_node(*n.rhs, p);
        case Op::Mul: return eval_node(*n.lhs, p) * eval_node(*n.rhs, p);
        case Op::Div: {
            const double num = eval_node(*n.lhs, p);
            const double den = eval_node(*n.rhs, p);
            if (den == 0.0) domain_error("division by zero");
            return num / den;
        }
        case Op::Pow: {
            const double base = eval_node(*n.lhs, p);
            const double ex = eval_node(*n.rhs, p);
            if (base < 0.0 && ex != std::floor(ex)) domain_error("negative base with fractional exponent");
            if (base == 0.0 && ex < 0.0) domain_error("zero base with negative exponent");
            return std::pow(base, ex);
        }
        case Op::Neg: return -eval_node(*n.lhs, p);
        case Op::Sin: return std::sin(eval_node(*n.lhs, p));
        case Op::Cos: return std::cos(eval_node(*n.lhs, p));
        case Op::Exp: return std::exp(eval_node(*n.lhs, p));
        case Op::Sqrt: {
            const double a = eval_node(*n.lhs, p);
            if (a < 0.0) domain_error("sqrt of negative value");
            return std::sqrt(a);
        }
        case Op::Abs: return std::abs(eval_node(*n.lhs, p));
        case Op::Log: {
            const double a = eval_node(*n.lhs, p);
            if (a <= 0.0) domain_error("log of non-positive value");
            return std::log(a);
        }
    }
    return 0.0;
}

void print_node(const Node& n, std::string& out) {
    switch (n.op) {
        case Op::Const: {
            if (n.name) {
                out += n.name;
                return;
            }
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", std::abs(n.value));
            if (std::signbit(n.value)) {
                out += "(-";
                out += buf;
                out += ')';
            } else {
                out += buf;
            }
            return;
        }
        case Op::Var: out += "xyz"[static_cast<int>(n.var)]; return;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div:
        case Op::Pow: {
            static constexpr char symbols[] = "+-*/^";
            out += '(';
            print_node(*n.lhs, out);
            out += symbols[static_cast<int>(n.op) - static_cast<int>(Op::Add)];
            print_node(*n.rhs, out);
            out += ')';
            return;
        }
        case Op::Neg:
            out += "(-";
            print_node(*n.lhs, out);
            out += ')';
            return;
        default:
            out += function_name(n.op);
            out += '(';
            print_node(*n.lhs, out);
            out += ')';
            return;
    }
}

bool has_var(const Node& n, Var v) {
    switch (n.op) {
        case Op::Const: return false;
        case Op::Var: return n.var == v;
        default:
            return (n.lhs && has_var(*n.lhs, v)) || (n.rhs && has_var(*n.rhs, v));
    }
}

bool has_any_var(const Node& n) {
    return has_var(n, Var::X) || has_var(n, Var::Y) || has_var(n, Var::Z);
}

constexpr std::size_t kMaxNodes = 2'000'000;
constexpr std::size_t kMaxDepth = 4000;

std::size_t count_nodes(const Node& n, std::size_t cap) {
    std::size_t c = 1;
    if (n.lhs && c < cap) c += count_nodes(*n.lhs, cap - c);
    if (n.rhs && c < cap) c += count_nodes(*n.rhs, cap - c);
    return c;
}

std::size_t node_depth(const Node& n) {
    std::size_t d = 0;
    if (n.lhs) d = std::max(d, node_depth(*n.lhs));
    if (n.rhs) d = std::max(d, node_depth(*n.rhs));
    return d + 1;
}

bool equal_nodes(const Node& a, const Node& b) {
    if (a.op != b.op) return false;
    switch (a.op) {
        case Op::Const:
            if ((a.name == nullptr) != (b.name == nullptr)) return false;
            return a.value == b.value;
        case Op::Var: return a.var == b.var;
        default:
            if ((a.lhs == nullptr) != (b.lhs == nullptr)) return false;
            if ((a.rhs == nullptr) != (b.rhs == nullptr)) return false;
            return (!a.lhs || equal_nodes(*a.lhs, *b.lhs)) && (!a.rhs || equal_nodes(*a.rhs, *b.rhs));
    }
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    NodePtr parse_all() {
        NodePtr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected character");
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(ErrorKind::SyntaxError, what, pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        for (;;) {
            if (accept('+')) {
                lhs = make_node(Op::Add, lhs, parse_product());
            } else if (accept('-')) {
                lhs = make_node(Op::Sub, lhs, parse_product());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (accept('*')) {
                lhs = make_node(Op::Mul, lhs, parse_unary());
            } else if (accept('/')) {
                lhs = make_node(Op::Div, lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        if (accept('-')) return make_node(Op::Neg, parse_unary());
        return parse_power();
    }

    // Exponent operand: allows a leading minus so that 2^-1 parses.
    NodePtr parse_exponent() {
        if (accept('-')) return make_node(Op::Neg, parse_exponent());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (accept('^')) return make_node(Op::Pow, base, parse_exponent());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0) {
            pos_ = start;
            fail("malformed number");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
            if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
                pos_ = look;
                digits();
            }
        }
        const std::string literal(text_.substr(start, pos_ - start));
        return make_const(std::strtod(literal.c_str(), nullptr));
    }

    NodePtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string_view id = text_.substr(start, pos_ - start);

        static constexpr std::pair<std::string_view, Op> functions[] = {
            {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
            {"sqrt", Op::Sqrt}, {"abs", Op::Abs}, {"log", Op::Log},
        };
        for (const auto& [fname, op] : functions) {
            if (id == fname) {
                if (!accept('(')) fail("expected '(' after function name");
                NodePtr arg = parse_sum();
                if (!accept(')')) fail("expected ')'");
                return make_node(op, arg);
            }
        }
        if (id == "x") return make_var(Var::X);
        if (id == "y") return make_var(Var::Y);
        if (id == "z") return make_var(Var::Z);
        if (id == "pi") return make_const(std::numbers::pi, "pi");
        if (id == "e") return make_const(std::numbers::e, "e");
        throw ParseError(ErrorKind::UnknownIdentifier, "unknown identifier '" + std::string(id) + "'", start);
    }
};

// ---------------------------------------------------------------------------
// Differentiation

Expr wrap(NodePtr n) { return Expr(std::move(n)); }

Expr diff_node(const NodePtr& n, Var v) {
    if (!has_var(*n, v)) return Expr::constant(0.0);
    const Expr a = n->lhs ? wrap(n->lhs) : Expr();
    const Expr b = n->rhs ? wrap(n->rhs) : Expr();
    switch (n->op) {
        case Op::Const: return Expr::constant(0.0);
        case Op::Var: return Expr::constant(n->var == v ? 1.0 : 0.0);
        case Op::Add: return diff_node(n->lhs, v) + diff_node(n->rhs, v);
        case Op::Sub: return diff_node(n->lhs, v) - diff_node(n->rhs, v);
        case Op::Mul: return diff_node(n->lhs, v) * b + a * diff_node(n->rhs, v);
        case Op::Div: return diff_node(n->lhs, v) / b - a * diff_node(n->rhs, v) / (b * b);
        case Op::Pow: {
            if (!has_any_var(*n->rhs)) return b * pow(a, b - Expr::constant(1.0)) * diff_node(n->lhs, v);
            if (!has_any_var(*n->lhs)) return wrap(n) * log(a) * diff_node(n->rhs, v);
            return wrap(n) * (diff_node(n->rhs, v) * log(a) + b * diff_node(n->lhs, v) / a);
        }
        case Op::Neg: return -diff_node(n->lhs, v);
        case Op::Sin: return cos(a) * diff_node(n->lhs, v);
        case Op::Cos: return -(sin(a) * diff_node(n->lhs, v));
        case Op::Exp: return wrap(n) * diff_node(n->lhs, v);
        case Op::Sqrt: return diff_node(n->lhs, v) / (Expr::constant(2.0) * wrap(n));
        case Op::Abs: return a / wrap(n) * diff_node(n->lhs, v);
        case Op::Log: return diff_node(n->lhs, v) / a;
    }
    return Expr::constant(0.0);
}

}  // namespace

// ---------------------------------------------------------------------------

Expr::Expr() : root_(make_const(0.0)) {}

Expr Expr::constant(double v) { return Expr(make_const(v)); }
Expr Expr::variable(Var v) { return Expr(make_var(v)); }
Expr Expr::pi() { return Expr(make_const(std::numbers::pi, "pi")); }

double Expr::eval(const Vec3& p) const {
    const double v = eval_node(*root_, p);
    if (!std::isfinite(v)) domain_error("non-finite result");
    return v;
}

std::string Expr::str() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::is_constant() const { return !has_any_var(*root_); }

std::optional<double> Expr::constant_value() const {
    if (!is_constant()) return std::nullopt;
    return eval(Vec3::Zero());
}

std::size_t Expr::node_count() const { return count_nodes(*root_, kMaxNodes + 1); }
std::size_t Expr::depth() const { return node_depth(*root_); }

Expr parse(std::string_view text) { return Expr(Parser(text).parse_all()); }

Expr differentiate(const Expr& e, Var v) {
    if (e.depth() > kMaxDepth) throw Error(ErrorKind::SymbolicDepthExceeded, "expression too deep to differentiate");
    Expr d = diff_node(e.root_ptr(), v);
    if (d.node_count() > kMaxNodes || d.depth() > kMaxDepth)
        throw Error(ErrorKind::SymbolicDepthExceeded, "derivative exceeds the symbolic size limit");
    return d;
}

std::array<Expr, 3> gradient(const Expr& e) {
    return {differentiate(e, Var::X), differentiate(e, Var::Y), differentiate(e, Var::Z)};
}

bool structurally_equal(const Expr& a, const Expr& b) { return equal_nodes(a.root(), b.root()); }

// ---------------------------------------------------------------------------
// Simplifying constructors. Only unnamed-or-named numeric constants fold;
// nothing here reorders operands, so evaluation stays deterministic.

Expr operator+(const Expr& a, const Expr& b) {
    const auto& l = a.root_ptr();
    const auto& r = b.root_ptr();
    if (is_const(l) && is_const(r)) return Expr::constant(l->value + r->value);
    if (is_const(l, 0.0)) return b;
    if (is_const(r, 0.0)) return a;
    return Expr(make_node(Op::Add, l, r));
}

Expr operator-(const Expr& a, const Expr& b) {
    const auto& l = a.root_ptr();
    const auto& r = b.root_ptr();
    if (is_const(l) && is_const(r)) return Expr::constant(l->value - r->value);
    if (is_const(r, 0.0)) return a;
    if (is_const(l, 0.0)) return -b;
    return Expr(make_node(Op::Sub, l, r));
}

Expr operator*(const Expr& a, const Expr& b) {
    const auto& l = a.root_ptr();
    const auto& r = b.root_ptr();
    if (is_const(l) && is_const(r)) return Expr::constant(l->value * r->value);
    if (is_const(l, 0.0) || is_const(r, 0.0)) return Expr::constant(0.0);
    if (is_const(l, 1.0)) return b;
    if (is_const(r, 1.0)) return a;
    if (is_const(l, -1.0)) return -b;
    if (is_const(r, -1.0)) return -a;
    return Expr(make_node(Op::Mul, l, r));
}

Expr operator/(const Expr& a, const Expr& b) {
    const auto& l = a.root_ptr();
    const auto& r = b.root_ptr();
    if (is_const(l) && is_const(r) && r->value != 0.0) return Expr::constant(l->value / r->value);
    if (is_const(l, 0.0)) return Expr::constant(0.0);
    if (is_const(r, 1.0)) return a;
    return Expr(make_node(Op::Div, l, r));
}

Expr operator-(const Expr& a) {
    const auto& n = a.root_ptr();
    if (is_const(n)) return Expr::constant(-n->value);
    if (n->op == Op::Neg) return Expr(n->lhs);
    return Expr(make_node(Op::Neg, n));
}

Expr pow(const Expr& a, const Expr& b) {
    const auto& l = a.root_ptr();
    const auto& r = b.root_ptr();
    if (is_const(r, 0.0)) return Expr::constant(1.0);
    if (is_const(r, 1.0)) return a;
    if (is_const(l) && is_const(r)) {
        const double v = std::pow(l->value, r->value);
        if (std::isfinite(v)) return Expr::constant(v);
    }
    return Expr(make_node(Op::Pow, l, r));
}

namespace {
template <class F>
Expr unary(Op op, const Expr& a, F fold) {
    const auto& n = a.root_ptr();
    if (is_const(n)) {
        const double v = fold(n->value);
        if (std::isfinite(v)) return Expr::constant(v);
    }
    return Expr(make_node(op, n));
}
}  // namespace

Expr sin(const Expr& a) { return unary(Op::Sin, a, [](double v) { return std::sin(v); }); }
Expr cos(const Expr& a) { return unary(Op::Cos, a, [](double v) { return std::cos(v); }); }
Expr exp(const Expr& a) { return unary(Op::Exp, a, [](double v) { return std::exp(v); }); }
Expr sqrt(const Expr& a) {
    return unary(Op::Sqrt, a, [](double v) { return v < 0 ? std::nan("") : std::sqrt(v); });
}
Expr abs(const Expr& a) { return unary(Op::Abs, a, [](double v) { return std::abs(v); }); }
Expr log(const Expr& a) {
    return unary(Op::Log, a, [](double v) { return v <= 0 ? std::nan("") : std::log(v); });
}

}  // namespace mustructure::expr
