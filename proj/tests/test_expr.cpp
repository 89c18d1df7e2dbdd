#include "joule/expr.hpp"
#include "joule/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

using namespace joule;

namespace {

double ev(const std::string& src, double x = 0, double y = 0, double z = 0, double u = 0) {
    return Expr::parse(src).eval({x, y, z}, u);
}

} // namespace

TEST_CASE("evaluation against hand-computed table") {
    CHECK(ev("x", 2) == doctest::Approx(2.0));
    CHECK(ev("1+2*3") == doctest::Approx(7.0));
    CHECK(ev("tanh(0)+x^2", 3) == doctest::Approx(9.0));
    CHECK(ev("2^3^2") == doctest::Approx(512.0));       // right-associative
    CHECK(ev("-2^2") == doctest::Approx(-4.0));         // ^ binds tighter than unary minus
    CHECK(ev("6-2-1") == doctest::Approx(3.0));         // left-associative
    CHECK(ev("3/2/2") == doctest::Approx(0.75));
    CHECK(ev("min(3,2)*max(1,4)") == doctest::Approx(8.0));
    CHECK(ev("abs(-2.5)") == doctest::Approx(2.5));
    CHECK(ev("exp(0)+cos(0)") == doctest::Approx(2.0));
    CHECK(ev("sin(1)") == doctest::Approx(std::sin(1.0)));
    CHECK(ev("2*-3") == doctest::Approx(-6.0));
    CHECK(ev("1e2+1") == doctest::Approx(101.0));
    CHECK(ev(".5*4") == doctest::Approx(2.0));
    CHECK(ev("(1+2)*(3+4)") == doctest::Approx(21.0));
    CHECK(ev("x*y - z/u", 2, 3, 8, 4) == doctest::Approx(4.0));
}

TEST_CASE("parse errors carry a position") {
    CHECK_THROWS_AS(Expr::parse("x+*y"), ParseError);
    try {
        Expr::parse("x+*y");
    } catch (const ParseError& e) {
        CHECK(e.position() == 2);
    }
    CHECK_THROWS_AS(Expr::parse("2+"), ParseError);
    CHECK_THROWS_AS(Expr::parse("foo(1)"), ParseError);
    CHECK_THROWS_AS(Expr::parse("min(1)"), ParseError);
    CHECK_THROWS_AS(Expr::parse("(1+2"), ParseError);
    CHECK_THROWS_AS(Expr::parse(""), ParseError);
    CHECK_THROWS_AS(Expr::parse("   "), ParseError);
    CHECK_THROWS_AS(Expr::parse("1)"), ParseError);
    CHECK_THROWS_AS(Expr::parse("q"), ParseError);
}

namespace {

std::string random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    std::uniform_real_distribution<double> val(0.0, 10.0);
    switch (pick(rng)) {
        case 0: {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", val(rng));
            return buf;
        }
        case 1: return std::string(1, "xyzu"[rng() % 4]);
        case 2: return std::string(1, "xy"[rng() % 2]);
        case 3: return "(" + random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1) + ")";
        case 4: return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
        case 5: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
        case 6: return "-" + random_expr(rng, depth - 1);
        case 7: return "sin(" + random_expr(rng, depth - 1) + ")";
        case 8: return "min(" + random_expr(rng, depth - 1) + ", " + random_expr(rng, depth - 1) + ")";
        default: return random_expr(rng, depth - 1) + "/(" + random_expr(rng, depth - 1) + "+20)";
    }
}

} // namespace

TEST_CASE("parse-print-parse reproduces an equal AST") {
    std::mt19937 rng(7);
    for (int i = 0; i < 300; ++i) {
        Expr e = Expr::parse(random_expr(rng, 4));
        std::string printed = e.to_string();
        Expr back = Expr::parse(printed);
        CHECK(e.equals(back));
        CHECK(back.to_string() == printed);
    }
    // precedence-sensitive shapes
    for (const char* s : {"1-(2-3)", "1-(2+3)", "(1+2)*3", "-(1*2)", "(2^3)^2", "2^-3", "x/(y*z)"}) {
        Expr e = Expr::parse(s);
        CHECK(e.equals(Expr::parse(e.to_string())));
        CHECK(e.eval({1, 2, 3}, 4) == doctest::Approx(Expr::parse(e.to_string()).eval({1, 2, 3}, 4)));
    }
}

TEST_CASE("forward jets match central differences") {
    const std::vector<std::string> smooth = {
        "sin(x)*cos(y)",
        "exp(x*y/4)+tanh(z)",
        "x^3*y - 2*x/(1+y^2)",
        "(x+y)^2.5 + z*u",
        "exp(-(x^2+y^2))",
        "x^(y+1)",         // non-constant exponent
        "(2*x)^(u/2)",
    };
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coord(0.2, 1.8);
    const double h = 1e-5;
    for (const auto& src : smooth) {
        Expr e = Expr::parse(src);
        for (int rep = 0; rep < 20; ++rep) {
            Vec3 p{coord(rng), coord(rng), coord(rng)};
            double u = coord(rng);
            for (int dir = 0; dir < 4; ++dir) {
                Jet2 j = e.jet(p, u, dir);
                Vec3 pp = p, pm = p;
                double up = u, um = u;
                if (dir < 3) {
                    pp[dir] += h;
                    pm[dir] -= h;
                } else {
                    up += h;
                    um -= h;
                }
                const double f0 = e.eval(p, u);
                const double fp = e.eval(pp, up);
                const double fm = e.eval(pm, um);
                const double d1 = (fp - fm) / (2 * h);
                const double d2 = (fp - 2 * f0 + fm) / (h * h);
                CHECK(j.v == doctest::Approx(f0));
                CHECK(j.d == doctest::Approx(d1).epsilon(1e-5));
                CHECK(j.dd == doctest::Approx(d2).epsilon(5e-4).scale(1.0 + std::abs(d2)));
            }
        }
    }
}

TEST_CASE("gradient and laplacian helpers") {
    Expr e = Expr::parse("x^2 + 3*y^2");
    Vec3 g = e.gradient({2, 1, 0}, 2);
    CHECK(g.x == doctest::Approx(4.0));
    CHECK(g.y == doctest::Approx(6.0));
    CHECK(e.laplacian({2, 1, 0}, 2) == doctest::Approx(8.0));

    Expr c = Expr::parse("1+0.5*tanh(2*u)");
    const double u = 0.3;
    const double t = std::tanh(2 * u);
    CHECK(c.jet({0, 0, 0}, u, 3).d == doctest::Approx(1.0 * (1 - t * t)));
}

TEST_CASE("uses_var reports dependencies") {
    Expr e = Expr::parse("x + tanh(u)");
    CHECK(e.uses_var(0));
    CHECK(!e.uses_var(1));
    CHECK(!e.uses_var(2));
    CHECK(e.uses_var(3));
}
