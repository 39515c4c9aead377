#pragma once

/**
 * @file expr.hpp
 * @brief Immutable expression trees for smooth maps.
 *
 * Expressions are written in prefix notation, e.g. `(add (pow x 2) (mul 0.5 x))`.
 * Every node supports point evaluation, natural interval extension, and exact
 * structural differentiation, so derivative norms never rely on finite
 * differences.
 */

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ffl/interval.hpp"

namespace ffl {

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sqrt, Exp, Log, Sin, Cos };

class Expr {
public:
    /// The constant 0.
    Expr();

    static Expr constant(double v);
    static Expr variable(int index);

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, int exponent);
    friend Expr sqrt(const Expr& a);
    friend Expr exp(const Expr& a);
    friend Expr log(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);

    /// Parses prefix notation. `variables` names coordinates 0, 1, ... in order;
    /// `x<k>` always names coordinate k.
    static Expr parse(std::string_view text, std::span<const std::string> variables);
    /// Parses with the default names x, y, z.
    static Expr parse(std::string_view text);

    double eval(std::span<const double> point) const;
    double eval(double x) const { return eval(std::span<const double>(&x, 1)); }
    Interval eval(std::span<const Interval> box) const;
    Interval eval(Interval x) const { return eval(std::span<const Interval>(&x, 1)); }

    /// Exact partial derivative with respect to coordinate `var`.
    Expr derivative(int var) const;

    /// Replaces variable i by replacements[i] (composition). Variables beyond
    /// the replacement list are left in place.
    Expr substitute(std::span<const Expr> replacements) const;

    /// Highest variable index used, or -1 for a constant expression.
    int max_variable() const;
    bool is_constant() const { return op() == Op::Const; }

    /// Monomial coefficients (ascending degree) when the expression is a
    /// polynomial in its single variable `var`; throws ValidationError otherwise.
    std::vector<double> polynomial_coefficients(int var = 0) const;

    /// Canonical prefix form; parse(to_string()) reproduces the tree.
    std::string to_string() const;

    // Structural access for alternative evaluators (high precision).
    Op op() const;
    double value() const;
    int index() const;
    int exponent() const;
    std::span<const Expr> children() const;

    std::size_t node_count() const;

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Expr make(Op op, std::vector<Expr> kids, double value = 0.0, int index = 0);

    std::shared_ptr<const Node> node_;
};

}  // namespace ffl
