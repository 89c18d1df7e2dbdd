#pragma once

#include "joule/geometry.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace joule {

/// Second-order jet: value plus first and second derivative along one
/// direction. Propagating jets through an expression gives exact forward-mode
/// derivatives.
struct Jet2 {
    double v = 0.0;
    double d = 0.0;
    double dd = 0.0;
};

/// Parsed arithmetic expression over the variables x, y, z, u.
///
/// Supported syntax: numeric literals, + - * / ^ with the usual precedence
/// (^ binds tighter than unary minus, which binds tighter than * and /),
/// left-associative + - * /, right-associative ^, and the functions
/// sin, cos, exp, tanh, abs, min, max.
class Expr {
public:
    Expr() = default;

    /// Throws ParseError (with character position) on malformed input or
    /// unknown identifiers.
    static Expr parse(std::string_view src);
    /// Parses a leading expression and reports how many characters it used;
    /// lets embedding grammars (boundary predicates) continue after it.
    static Expr parse_prefix(std::string_view src, std::size_t& consumed);
    static Expr constant(double value);

    bool empty() const { return root_ == nullptr; }

    double eval(const Vec3& p, double u = 0.0) const;
    /// Jet along coordinate direction dir: 0 = x, 1 = y, 2 = z, 3 = u.
    Jet2 jet(const Vec3& p, double u, int dir) const;
    Vec3 gradient(const Vec3& p, int dim, double u = 0.0) const;
    double laplacian(const Vec3& p, int dim, double u = 0.0) const;

    /// Prints so that parse(to_string()) reproduces an equal AST.
    std::string to_string() const;
    bool equals(const Expr& other) const;
    bool uses_var(int idx) const;

    struct Node; // implementation detail, defined in expr.cpp

private:
    explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const Node> root_;
};

} // namespace joule
