// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "mustructure/common.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace mustructure::expr {

/// Ambient coordinate index: x = 0, y = 1, z = 2.
enum class Var : int { X = 0, Y = 1, Z = 2 };

enum class Op {
    Const,
    Var,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
    Log,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable AST node. `name` is set for the symbolic constants pi and e so
/// that printing reproduces the source spelling.
struct Node {
    Op op = Op::Const;
    double value = 0.0;
    Var var = Var::X;
    const char* name = nullptr;
    NodePtr lhs;
    NodePtr rhs;
};

/// Scalar expression in x, y, z. Cheap to copy; subtrees are shared.
class Expr {
public:
    Expr();  // the constant 0
    explicit Expr(NodePtr root) : root_(std::move(root)) {}

    static Expr constant(double v);
    static Expr variable(Var v);
    static Expr pi();

    /// Evaluate at an ambient point. Throws DomainError for sqrt/log of
    /// negatives, division by zero and non-finite results.
    double eval(const Vec3& p) const;
    double operator()(const Vec3& p) const { return eval(p); }

    /// Fully parenthesised text that parses back to the same tree.
    std::string str() const;

    bool is_constant() const;  // no variables anywhere
    std::optional<double> constant_value() const;
    std::size_t node_count() const;
    std::size_t depth() const;

    const Node& root() const { return *root_; }
    const NodePtr& root_ptr() const { return root_; }

private:
    NodePtr root_;
};

/// Parse with the precedence ^ > unary - > * / > + -. `^` is right
/// associative, the rest left associative. Identifiers: x y z pi e and the
/// functions sin cos exp sqrt abs log.
Expr parse(std::string_view text);

/// Exact symbolic derivative with light algebraic simplification.
Expr differentiate(const Expr& e, Var v);

/// Gradient (d/dx, d/dy, d/dz).
std::array<Expr, 3> gradient(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

// Simplifying constructors used by the symbolic pipelines.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr sqrt(const Expr& a);
Expr abs(const Expr& a);
Expr log(const Expr& a);

}  // namespace mustructure::expr
