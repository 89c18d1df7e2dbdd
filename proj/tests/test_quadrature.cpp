#include "joule/quadrature.hpp"

#include <doctest.h>

#include <cmath>

using namespace joule;

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

/// Exact integral of x^a y^b z^c over the unit reference simplex:
/// a! b! c! / (a+b+c+dim)!
double monomial_integral(int dim, int a, int b, int c) {
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + dim);
}

double ref_volume(int dim) { return dim == 1 ? 1.0 : (dim == 2 ? 0.5 : 1.0 / 6.0); }

} // namespace

TEST_CASE("gauss_legendre integrates monomials exactly up to 2n-1") {
    for (int n = 1; n <= 8; ++n) {
        std::vector<double> x, w;
        gauss_legendre(n, x, w);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += w[i] * std::pow(x[i], k);
            CHECK(acc == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
        }
    }
}

TEST_CASE("weights are positive and sum to the reference volume") {
    for (int dim = 1; dim <= 3; ++dim)
        for (int degree = 0; degree <= 8; ++degree) {
            QuadratureRule rule = simplex_quadrature(dim, degree);
            double sum = 0.0;
            for (double w : rule.weights) {
                CHECK(w > 0.0);
                sum += w;
            }
            CHECK(sum == doctest::Approx(ref_volume(dim)).epsilon(1e-13));
        }
}

TEST_CASE("monomials up to the design degree integrate exactly") {
    for (int dim = 1; dim <= 3; ++dim)
        for (int degree = 0; degree <= 8; ++degree) {
            QuadratureRule rule = simplex_quadrature(dim, degree);
            for (int a = 0; a <= degree; ++a)
                for (int b = 0; b <= (dim >= 2 ? degree - a : 0); ++b)
                    for (int c = 0; c <= (dim >= 3 ? degree - a - b : 0); ++c) {
                        double acc = 0.0;
                        for (std::size_t q = 0; q < rule.size(); ++q) {
                            const Vec3& p = rule.points[q];
                            acc += rule.weights[q] * std::pow(p.x, a) *
                                   (dim >= 2 ? std::pow(p.y, b) : 1.0) *
                                   (dim >= 3 ? std::pow(p.z, c) : 1.0);
                        }
                        const double exact = monomial_integral(dim, a, b, c);
                        CHECK(acc == doctest::Approx(exact).epsilon(1e-12));
                    }
        }
}

TEST_CASE("points lie inside the reference simplex") {
    for (int dim = 1; dim <= 3; ++dim) {
        QuadratureRule rule = simplex_quadrature(dim, 6);
        for (const Vec3& p : rule.points) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                CHECK(p[i] >= 0.0);
                s += p[i];
            }
            CHECK(s <= 1.0 + 1e-14);
        }
    }
}
