#ifndef PTQM_EXPR_HPP
#define PTQM_EXPR_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ptqm/errors.hpp"

namespace ptqm {

/// Immutable symbolic expression in real variables x1..xn.
///
/// Trees are built from constants, variables, the arithmetic operators,
/// integer powers and a fixed whitelist of unary functions. All indices in
/// the public API are 1-based, matching the variable names x1, x2, ...
/// Expr values are immutable after construction and safe to share across
/// threads.
class Expr {
public:
    enum class Kind {
        Constant,
        Variable,
        Add,
        Sub,
        Mul,
        Div,
        Neg,
        IntPow,
        Func,
    };

    enum class Func {
        Sin,
        Cos,
        Tan,
        Sinh,
        Cosh,
        Tanh,
        Exp,
        Log,
        Sqrt,
        Asinh,
        Atan,
    };

    Expr() : Expr(constant(0.0)) {}

    // Leaf constructors.
    static Expr constant(double value);
    static Expr variable(int index); // index >= 1

    // Node constructors. Also available as overloaded operators below.
    static Expr add(Expr a, Expr b);
    static Expr sub(Expr a, Expr b);
    static Expr mul(Expr a, Expr b);
    static Expr div(Expr a, Expr b);
    static Expr neg(Expr a);
    static Expr int_pow(Expr base, std::int64_t exponent);
    static Expr apply(Func f, Expr a);

    Kind kind() const;
    /// Largest variable index referenced anywhere in the tree (0 if none).
    int max_variable() const;

    // Node accessors; calling one that does not match kind() is a logic error.
    double constant_value() const;
    int variable_index() const;
    std::int64_t exponent() const;
    Func func() const;
    Expr child(int which) const; // 0 = left/only child, 1 = right child

    /// Structural equality (same shape, same constants bit-for-bit).
    bool equals(const Expr& other) const;

    /// IEEE double value at `point`; point[i-1] is the value of xi.
    /// Throws DomainError for log/sqrt/division violations, ArityError if
    /// the point is shorter than max_variable().
    double eval(const std::vector<double>& point) const;

    /// Exact symbolic derivative with respect to x`var`.
    Expr derive(int var) const;

    /// Constant folding and unit/zero identities. No deep cancellation:
    /// eval(simplify(e), p) == eval(e, p) wherever both are defined.
    Expr simplify() const;

    /// Normalized text; parse(print(e)) recovers the tree up to simplify().
    std::string print() const;

    static const char* func_name(Func f);

private:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    explicit Expr(NodePtr node) : node_(std::move(node)) {}

    NodePtr node_;

    friend Expr parse(const std::string& text, int arity);
};

/// Parses expression text over variables x1..x<arity>.
///
/// Grammar (external contract):
///   tokens     = identifiers [a-z][a-z0-9]*,
///                numbers [0-9]+(.[0-9]+)?([eE][+-]?[0-9]+)?,
///                operators + - * / ^ ( ) ,
///   precedence = ^  >  unary -  >  * /  >  + -
///   ^ is right-associative and takes integer-literal exponents only.
///   `pi` is the constant 3.14159...; `name(expr)` applies a whitelisted
///   function.
///
/// Throws SyntaxError on malformed text, ArityError if a variable index
/// exceeds `arity`.
Expr parse(const std::string& text, int arity);

inline Expr operator+(Expr a, Expr b) { return Expr::add(std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return Expr::sub(std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return Expr::mul(std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return Expr::div(std::move(a), std::move(b)); }
inline Expr operator-(Expr a) { return Expr::neg(std::move(a)); }

} // namespace ptqm

#endif
