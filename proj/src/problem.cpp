#include "joule/problem.hpp"

#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace joule {

Conductivity Conductivity::constant(double sigma0) {
    if (!(sigma0 > 0.0)) throw ArgumentError("conductivity must be positive");
    Conductivity c;
    c.family_ = Family::constant;
    c.a_ = sigma0;
    c.lower_ = c.upper_ = sigma0;
    c.lipschitz_ = 0.0;
    return c;
}

Conductivity Conductivity::sigmoid(double a, double b, double c) {
    Conductivity s;
    s.family_ = Family::sigmoid;
    s.a_ = a;
    s.b_ = b;
    s.c_ = c;
    s.lower_ = a - std::abs(b);
    s.upper_ = a + std::abs(b);
    s.lipschitz_ = std::abs(b * c);
    if (!(s.lower_ > 0.0)) throw ArgumentError("sigmoid conductivity is not bounded below by a positive constant");
    return s;
}

Conductivity Conductivity::expression(Expr e, double u_min, double u_max) {
    if (e.empty()) throw ArgumentError("empty conductivity expression");
    for (int v : {0, 1, 2})
        if (e.uses_var(v)) throw ArgumentError("conductivity expression may only depend on u");
    Conductivity c;
    c.family_ = Family::expression;
    c.expr_ = std::move(e);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double lip = 0.0;
    const int samples = 2001;
    for (int i = 0; i < samples; ++i) {
        double u = u_min + (u_max - u_min) * i / (samples - 1);
        Jet2 j = c.expr_.jet({0, 0, 0}, u, 3);
        if (!std::isfinite(j.v) || !std::isfinite(j.d))
            throw DataError("conductivity expression is non-finite at u = " + std::to_string(u));
        lo = std::min(lo, j.v);
        hi = std::max(hi, j.v);
        lip = std::max(lip, std::abs(j.d));
    }
    if (!(lo > 0.0)) throw DataError("sampled conductivity is not positive over the declared range");
    c.lower_ = lo;
    c.upper_ = hi;
    c.lipschitz_ = lip;
    return c;
}

double Conductivity::value(double u) const {
    switch (family_) {
        case Family::constant: return a_;
        case Family::sigmoid: return a_ + b_ * std::tanh(c_ * u);
        case Family::expression: return expr_.eval({0, 0, 0}, u);
    }
    return a_;
}

double Conductivity::derivative(double u) const {
    switch (family_) {
        case Family::constant: return 0.0;
        case Family::sigmoid: {
            double t = std::tanh(c_ * u);
            return b_ * c_ * (1.0 - t * t);
        }
        case Family::expression: return expr_.jet({0, 0, 0}, u, 3).d;
    }
    return 0.0;
}

void Conductivity::eval(std::span<const double> u, std::span<double> sigma,
                        std::span<double> dsigma) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
        sigma[i] = value(u[i]);
        dsigma[i] = derivative(u[i]);
        if (family_ == Family::expression && (!std::isfinite(sigma[i]) || !std::isfinite(dsigma[i])))
            throw DataError("conductivity expression evaluated to a non-finite value");
    }
}

double cutoff(double f, double gphi_at_x, double g_lo, double g_hi) {
    return std::min(std::max(f + gphi_at_x, g_lo), g_hi) - gphi_at_x;
}

double cutoff_grad_factor(double f_plus_gphi, double g_lo, double g_hi) {
    return (f_plus_gphi >= g_lo && f_plus_gphi <= g_hi) ? 1.0 : 0.0;
}

std::pair<double, double> sample_dirichlet_bounds(const Mesh& mesh, const ScalarField& g_phi) {
    FacetSets sets = facet_sets(mesh);
    if (sets.dirichlet_phi.empty()) throw DataError("mesh has no Dirichlet facets for phi");
    QuadratureRule rule = simplex_quadrature(mesh.dim() - 1, 4);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int idx : sets.dirichlet_phi) {
        const Facet& f = sets.boundary[idx];
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Vec3 p;
            if (mesh.dim() == 2) {
                double t = rule.points[q].x;
                p = (1.0 - t) * mesh.vertex(f.verts[0]) + t * mesh.vertex(f.verts[1]);
            } else {
                double a = rule.points[q].x, b = rule.points[q].y;
                p = (1.0 - a - b) * mesh.vertex(f.verts[0]) + a * mesh.vertex(f.verts[1]) +
                    b * mesh.vertex(f.verts[2]);
            }
            double v = g_phi(p);
            if (!std::isfinite(v)) throw DataError("g_phi is non-finite on the Dirichlet boundary");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        // include facet corners so constant data on a single facet is exact
        for (int i = 0; i < mesh.dim(); ++i) {
            double v = g_phi(mesh.vertex(f.verts[i]));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return {lo, hi};
}

ScalarField field_of(const Expr& e) {
    return [e](const Vec3& p) { return e.eval(p); };
}

VectorField gradient_field_of(const Expr& e, int dim) {
    return [e, dim](const Vec3& p) { return e.gradient(p, dim); };
}

RobinField robin_field_of(const Expr& e) {
    return [e](const Vec3& p, const Vec3&) { return e.eval(p); };
}

ScalarField zero_field() {
    return [](const Vec3&) { return 0.0; };
}

} // namespace joule
