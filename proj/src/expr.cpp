#include "joule/expr.hpp"

#include "joule/errors.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace joule {

namespace {

enum class Kind { constant, variable, neg, add, sub, mul, div, pow, call };
enum class Fn { sin, cos, exp, tanh, abs, min, max };

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::exp: return "exp";
        case Fn::tanh: return "tanh";
        case Fn::abs: return "abs";
        case Fn::min: return "min";
        case Fn::max: return "max";
    }
    return "?";
}

int fn_arity(Fn f) { return (f == Fn::min || f == Fn::max) ? 2 : 1; }

// --- jet arithmetic --------------------------------------------------------

Jet2 jadd(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d + b.d, a.dd + b.dd}; }
Jet2 jsub(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
Jet2 jneg(const Jet2& a) { return {-a.v, -a.d, -a.dd}; }
Jet2 jmul(const Jet2& a, const Jet2& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
}
Jet2 jdiv(const Jet2& a, const Jet2& b) {
    Jet2 q;
    q.v = a.v / b.v;
    q.d = (a.d - q.v * b.d) / b.v;
    q.dd = (a.dd - 2.0 * q.d * b.d - q.v * b.dd) / b.v;
    return q;
}
/// Chain rule through a scalar function with given first/second derivative at g.v.
Jet2 jchain(const Jet2& g, double f, double df, double ddf) {
    return {f, df * g.d, ddf * g.d * g.d + df * g.dd};
}
Jet2 jlog(const Jet2& a) { return jchain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
Jet2 jexp(const Jet2& a) {
    double e = std::exp(a.v);
    return jchain(a, e, e, e);
}
Jet2 jpow(const Jet2& a, const Jet2& b) {
    if (b.d == 0.0 && b.dd == 0.0) {
        const double p = b.v;
        const double f = std::pow(a.v, p);
        const double df = p * std::pow(a.v, p - 1.0);
        const double ddf = p * (p - 1.0) * std::pow(a.v, p - 2.0);
        return jchain(a, f, df, ddf);
    }
    return jexp(jmul(b, jlog(a)));
}

} // namespace

struct Expr::Node {
    Kind kind;
    double value = 0.0; // constant
    int var = -1;       // variable index
    Fn fn = Fn::sin;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::constant;
    n->value = v;
    return n;
}

NodePtr make_var(int idx) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::variable;
    n->var = idx;
    return n;
}

NodePtr make_node(Kind k, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_call(Fn f, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Kind::call;
    n->fn = f;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

double eval_node(const Expr::Node& n, const std::array<double, 4>& env) {
    switch (n.kind) {
        case Kind::constant: return n.value;
        case Kind::variable: return env[n.var];
        case Kind::neg: return -eval_node(*n.a, env);
        case Kind::add: return eval_node(*n.a, env) + eval_node(*n.b, env);
        case Kind::sub: return eval_node(*n.a, env) - eval_node(*n.b, env);
        case Kind::mul: return eval_node(*n.a, env) * eval_node(*n.b, env);
        case Kind::div: return eval_node(*n.a, env) / eval_node(*n.b, env);
        case Kind::pow: return std::pow(eval_node(*n.a, env), eval_node(*n.b, env));
        case Kind::call: {
            double a = eval_node(*n.a, env);
            switch (n.fn) {
                case Fn::sin: return std::sin(a);
                case Fn::cos: return std::cos(a);
                case Fn::exp: return std::exp(a);
                case Fn::tanh: return std::tanh(a);
                case Fn::abs: return std::abs(a);
                case Fn::min: return std::min(a, eval_node(*n.b, env));
                case Fn::max: return std::max(a, eval_node(*n.b, env));
            }
        }
    }
    return 0.0;
}

Jet2 jet_node(const Expr::Node& n, const std::array<Jet2, 4>& env) {
    switch (n.kind) {
        case Kind::constant: return {n.value, 0.0, 0.0};
        case Kind::variable: return env[n.var];
        case Kind::neg: return jneg(jet_node(*n.a, env));
        case Kind::add: return jadd(jet_node(*n.a, env), jet_node(*n.b, env));
        case Kind::sub: return jsub(jet_node(*n.a, env), jet_node(*n.b, env));
        case Kind::mul: return jmul(jet_node(*n.a, env), jet_node(*n.b, env));
        case Kind::div: return jdiv(jet_node(*n.a, env), jet_node(*n.b, env));
        case Kind::pow: return jpow(jet_node(*n.a, env), jet_node(*n.b, env));
        case Kind::call: {
            Jet2 a = jet_node(*n.a, env);
            switch (n.fn) {
                case Fn::sin: return jchain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v));
                case Fn::cos: return jchain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v));
                case Fn::exp: return jexp(a);
                case Fn::tanh: {
                    double t = std::tanh(a.v);
                    double s = 1.0 - t * t;
                    return jchain(a, t, s, -2.0 * t * s);
                }
                case Fn::abs: {
                    double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
                    return {std::abs(a.v), s * a.d, s * a.dd};
                }
                case Fn::min: {
                    Jet2 b = jet_node(*n.b, env);
                    return a.v <= b.v ? a : b;
                }
                case Fn::max: {
                    Jet2 b = jet_node(*n.b, env);
                    return a.v >= b.v ? a : b;
                }
            }
        }
    }
    return {};
}

// --- parser ----------------------------------------------------------------

struct Parser {
    std::string_view src;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < src.size() && src[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    [[noreturn]] void fail(const std::string& what) { throw ParseError(what, pos); }

    NodePtr parse_sum() {
        NodePtr lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = make_node(Kind::add, lhs, parse_term());
            else if (eat('-'))
                lhs = make_node(Kind::sub, lhs, parse_term());
            else
                return lhs;
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            if (eat('*'))
                lhs = make_node(Kind::mul, lhs, parse_unary());
            else if (eat('/'))
                lhs = make_node(Kind::div, lhs, parse_unary());
            else
                return lhs;
        }
    }

    NodePtr parse_unary() {
        if (eat('-')) return make_node(Kind::neg, parse_unary());
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (eat('^')) return make_node(Kind::pow, base, parse_unary());
        return base;
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos >= src.size()) fail("unexpected end of expression");
        char c = src[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (eat('(')) {
            NodePtr e = parse_sum();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr parse_number() {
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
            ++pos;
        if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
            std::size_t mark = pos++;
            if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
            if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
                while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
            } else {
                pos = mark; // "e" belonged to something else; not a valid exponent
            }
        }
        std::string text(src.substr(start, pos - start));
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) {
            pos = start;
            fail("malformed number '" + text + "'");
        }
        return make_const(v);
    }

    NodePtr parse_ident() {
        std::size_t start = pos;
        while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        std::string name(src.substr(start, pos - start));
        if (name == "x") return make_var(0);
        if (name == "y") return make_var(1);
        if (name == "z") return make_var(2);
        if (name == "u") return make_var(3);
        for (Fn f : {Fn::sin, Fn::cos, Fn::exp, Fn::tanh, Fn::abs, Fn::min, Fn::max}) {
            if (name != fn_name(f)) continue;
            if (!eat('(')) fail("expected '(' after function '" + name + "'");
            NodePtr a = parse_sum();
            NodePtr b;
            if (fn_arity(f) == 2) {
                if (!eat(',')) fail("function '" + name + "' takes two arguments");
                b = parse_sum();
            }
            if (!eat(')')) fail("expected ')'");
            return make_call(f, a, b);
        }
        pos = start;
        fail("unknown identifier '" + name + "'");
    }
};

// --- printing --------------------------------------------------------------

int node_prec(const Expr::Node& n) {
    switch (n.kind) {
        case Kind::add:
        case Kind::sub: return 1;
        case Kind::mul:
        case Kind::div: return 2;
        case Kind::neg: return 3;
        case Kind::pow: return 4;
        default: return 5;
    }
}

void print_node(const Expr::Node& n, int min_prec, std::string& out) {
    const int prec = node_prec(n);
    const bool parens = prec < min_prec;
    if (parens) out += '(';
    switch (n.kind) {
        case Kind::constant: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", n.value);
            out += buf;
            break;
        }
        case Kind::variable: out += "xyzu"[n.var]; break;
        case Kind::neg:
            out += '-';
            print_node(*n.a, 4, out);
            break;
        case Kind::add:
        case Kind::sub:
        case Kind::mul:
        case Kind::div:
            print_node(*n.a, prec, out);
            out += (n.kind == Kind::add ? '+' : n.kind == Kind::sub ? '-' : n.kind == Kind::mul ? '*' : '/');
            print_node(*n.b, prec + 1, out);
            break;
        case Kind::pow:
            print_node(*n.a, 5, out);
            out += '^';
            print_node(*n.b, 3, out);
            break;
        case Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print_node(*n.a, 0, out);
            if (n.b) {
                out += ", ";
                print_node(*n.b, 0, out);
            }
            out += ')';
            break;
    }
    if (parens) out += ')';
}

bool nodes_equal(const Expr::Node* a, const Expr::Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::constant: return a->value == b->value;
        case Kind::variable: return a->var == b->var;
        case Kind::call:
            if (a->fn != b->fn) return false;
            [[fallthrough]];
        default:
            return nodes_equal(a->a.get(), b->a.get()) && nodes_equal(a->b.get(), b->b.get());
    }
}

bool node_uses(const Expr::Node& n, int idx) {
    if (n.kind == Kind::variable) return n.var == idx;
    if (n.a && node_uses(*n.a, idx)) return true;
    return n.b && node_uses(*n.b, idx);
}

} // namespace

Expr Expr::parse(std::string_view src) {
    Parser p{src};
    p.skip_ws();
    if (p.pos >= src.size()) throw ParseError("empty expression", 0);
    NodePtr root = p.parse_sum();
    p.skip_ws();
    if (p.pos != src.size()) p.fail("trailing input");
    return Expr(std::move(root));
}

Expr Expr::parse_prefix(std::string_view src, std::size_t& consumed) {
    Parser p{src};
    p.skip_ws();
    if (p.pos >= src.size()) throw ParseError("empty expression", 0);
    NodePtr root = p.parse_sum();
    consumed = p.pos;
    return Expr(std::move(root));
}

Expr Expr::constant(double value) { return Expr(make_const(value)); }

double Expr::eval(const Vec3& p, double u) const {
    return eval_node(*root_, {p.x, p.y, p.z, u});
}

Jet2 Expr::jet(const Vec3& p, double u, int dir) const {
    std::array<Jet2, 4> env{Jet2{p.x, 0, 0}, Jet2{p.y, 0, 0}, Jet2{p.z, 0, 0}, Jet2{u, 0, 0}};
    env[dir].d = 1.0;
    return jet_node(*root_, env);
}

Vec3 Expr::gradient(const Vec3& p, int dim, double u) const {
    Vec3 g;
    for (int d = 0; d < dim; ++d) g[d] = jet(p, u, d).d;
    return g;
}

double Expr::laplacian(const Vec3& p, int dim, double u) const {
    double lap = 0.0;
    for (int d = 0; d < dim; ++d) lap += jet(p, u, d).dd;
    return lap;
}

std::string Expr::to_string() const {
    std::string out;
    if (root_) print_node(*root_, 0, out);
    return out;
}

bool Expr::equals(const Expr& other) const { return nodes_equal(root_.get(), other.root_.get()); }

bool Expr::uses_var(int idx) const { return root_ && node_uses(*root_, idx); }

} // namespace joule
