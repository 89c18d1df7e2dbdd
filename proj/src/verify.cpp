#include "joule/verify.hpp"

#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace joule {

ProblemData mms_problem(const Expr& exact_phi, const Expr& exact_u,
                        const Conductivity& conductivity, const Mesh& mesh, const Expr& kappa) {
    if (exact_phi.empty() || exact_u.empty())
        throw ArgumentError("mms_problem: exact fields must be non-empty");
    if (exact_phi.uses_var(3) || exact_u.uses_var(3))
        throw ArgumentError("mms_problem: exact fields may not depend on u");
    const int dim = mesh.dim();

    ProblemData data;
    data.conductivity = conductivity;
    data.g_phi = field_of(exact_phi);
    data.grad_g_phi = gradient_field_of(exact_phi, dim);
    data.g_u = field_of(exact_u);
    data.kappa = kappa.empty() ? zero_field() : field_of(kappa);

    Conductivity sigma = conductivity;
    data.f_phi = [exact_phi, exact_u, sigma, dim](const Vec3& x) {
        const double u = exact_u.eval(x);
        const Vec3 gu = exact_u.gradient(x, dim);
        const Vec3 gp = exact_phi.gradient(x, dim);
        return -(sigma.derivative(u) * dot(gu, gp) + sigma.value(u) * exact_phi.laplacian(x, dim));
    };
    data.f_u = [exact_phi, exact_u, sigma, dim](const Vec3& x) {
        const double u = exact_u.eval(x);
        const Vec3 gp = exact_phi.gradient(x, dim);
        return -exact_u.laplacian(x, dim) - sigma.value(u) * dot(gp, gp);
    };
    Expr kap = kappa;
    data.h_robin = [exact_u, kap, dim](const Vec3& x, const Vec3& normal) {
        const double k = kap.empty() ? 0.0 : kap.eval(x);
        return k * exact_u.eval(x) + dot(exact_u.gradient(x, dim), normal);
    };

    // Bounds: sampled global range of phi* so the clamp stays inactive at the
    // exact solution (the boundary range alone would truncate interior extrema
    // of a manufactured potential).
    const QuadratureRule rule = simplex_quadrature(dim, 4);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    auto probe = [&](const Vec3& x) {
        const double v = exact_phi.eval(x);
        if (!std::isfinite(v) || !std::isfinite(data.f_phi(x)) || !std::isfinite(data.f_u(x)))
            throw DataError("mms_problem: manufactured fields are non-finite (not twice differentiable?)");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (int v = 0; v < mesh.num_vertices(); ++v) probe(mesh.vertex(v));
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap map = mesh.cell_map(c);
        for (std::size_t q = 0; q < rule.size(); ++q) probe(map.to_physical(rule.points[q]));
    }
    data.g_lo = lo;
    data.g_hi = hi;
    return data;
}

std::vector<double> rates(const ConvergenceTable& table, double ConvergenceRow::* column) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
        const double e0 = table.rows[i].*column;
        const double e1 = table.rows[i + 1].*column;
        const double h0 = table.rows[i].h_max;
        const double h1 = table.rows[i + 1].h_max;
        out.push_back(std::log(e0 / e1) / std::log(h0 / h1));
    }
    return out;
}

double error_h1_expr(const FeFunction& fun, const Expr& exact, int quad_degree) {
    const int dim = fun.space->mesh().dim();
    const double l2 = error_l2(fun, field_of(exact), quad_degree);
    const double semi = error_h1_semi(fun, gradient_field_of(exact, dim), quad_degree);
    return std::sqrt(l2 * l2 + semi * semi);
}

double error_l2_expr(const FeFunction& fun, const Expr& exact, int quad_degree) {
    return error_l2(fun, field_of(exact), quad_degree);
}

double nodal_overshoot(const FeFunction& phi, double g_lo, double g_hi) {
    double mx = -std::numeric_limits<double>::infinity();
    double mn = -mx;
    for (double c : phi.coeffs) {
        mx = std::max(mx, c);
        mn = std::min(mn, c);
    }
    return std::max(0.0, mx - g_hi) + std::max(0.0, g_lo - mn);
}

ConvergenceTable convergence_study(const ProblemData& data, const ExactSolution& exact,
                                   const Mesh& initial_mesh, int levels, int degree_phi,
                                   int degree_u, const PicardOptions& opts) {
    if (levels < 2) throw ArgumentError("convergence_study: levels must be >= 2");
    ConvergenceTable table;
    auto mesh = std::make_shared<Mesh>(initial_mesh);
    for (int level = 0; level < levels; ++level) {
        Spaces spaces{std::make_shared<FunctionSpace>(mesh, degree_phi),
                      std::make_shared<FunctionSpace>(mesh, degree_u)};
        auto [state, report] = solve_joule(data, spaces, opts);
        if (!report.converged) {
            table.truncated = true;
            break;
        }
        const int qdeg = 2 * std::max(degree_phi, degree_u) + 2;
        ConvergenceRow row;
        row.h_max = mesh->max_diameter();
        row.ndofs = spaces.phi->ndofs() + spaces.u->ndofs();
        row.err_phi_h1 = error_h1_expr(state.phi, exact.phi, qdeg);
        row.err_u_h1 = error_h1_expr(state.u, exact.u, qdeg);
        row.err_phi_l2 = error_l2_expr(state.phi, exact.phi, qdeg);
        row.err_u_l2 = error_l2_expr(state.u, exact.u, qdeg);
        EstimatorReport est = estimate(state.phi, state.u, data, opts.threads);
        row.estimator_total = est.weighted_total;
        const double err_x = std::sqrt(row.err_phi_h1 * row.err_phi_h1 + row.err_u_h1 * row.err_u_h1);
        row.effectivity = err_x > 0.0 ? row.estimator_total / err_x : 0.0;
        row.picard_iterations = report.iterations;
        row.iterate_norm_max = report.iterate_norm_max;
        row.overshoot = nodal_overshoot(state.phi, data.g_lo, data.g_hi);
        table.rows.push_back(row);

        if (level + 1 < levels) {
            // dim bisection sweeps halve every diameter
            for (int sweep = 0; sweep < mesh->dim(); ++sweep) {
                std::vector<int> all(mesh->num_cells());
                for (int c = 0; c < mesh->num_cells(); ++c) all[c] = c;
                mesh = std::make_shared<Mesh>(refine(*mesh, all));
            }
        }
    }
    return table;
}

void write_convergence_csv(const ConvergenceTable& table, std::ostream& os) {
    os << "h_max,ndofs,err_phi_h1,err_u_h1,err_phi_l2,err_u_l2,estimator_total,effectivity,"
          "rate_phi_h1,rate_u_h1,rate_phi_l2,rate_u_l2\n";
    os.precision(17);
    const auto r_ph = rates(table, &ConvergenceRow::err_phi_h1);
    const auto r_uh = rates(table, &ConvergenceRow::err_u_h1);
    const auto r_pl = rates(table, &ConvergenceRow::err_phi_l2);
    const auto r_ul = rates(table, &ConvergenceRow::err_u_l2);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const ConvergenceRow& r = table.rows[i];
        os << r.h_max << ',' << r.ndofs << ',' << r.err_phi_h1 << ',' << r.err_u_h1 << ','
           << r.err_phi_l2 << ',' << r.err_u_l2 << ',' << r.estimator_total << ',' << r.effectivity;
        if (i > 0)
            os << ',' << r_ph[i - 1] << ',' << r_uh[i - 1] << ',' << r_pl[i - 1] << ',' << r_ul[i - 1];
        else
            os << ",,,,";
        os << '\n';
    }
}

SmallDataReport small_data_check(const FeFunction& phi_n, const ProblemData& data, double c7,
                                 double c8, double c9, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("small_data_check: delta must be in (0, 1)");
    if (c7 < 0.0 || !(c8 > 0.0) || !(c9 > 0.0))
        throw ArgumentError("small_data_check: constants must be positive (c7 >= 0)");

    SmallDataReport rep;
    rep.c7 = c7;
    rep.c8 = c8;
    rep.c9 = c9;
    rep.delta = delta;
    rep.sigma_lo = data.conductivity.lower();
    rep.sigma_hi = data.conductivity.upper();
    rep.g_range = data.g_hi - data.g_lo;
    rep.grad_phi_l3 = norm(phi_n, NormKind::L3Grad());

    // || grad g_phi ||_L3 from the analytic field
    const Mesh& mesh = phi_n.space->mesh();
    const QuadratureRule rule = simplex_quadrature(mesh.dim(), 6);
    double acc = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const AffineMap map = mesh.cell_map(c);
        const double jac = std::abs(map.det);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec3 g = data.grad_g_phi(map.to_physical(rule.points[q]));
            acc += jac * rule.weights[q] * std::pow(norm(g), 3.0);
        }
    }
    rep.grad_gphi_l3 = std::cbrt(acc);

    rep.c5 = c7 * c8 * (1.0 + c9) * rep.grad_phi_l3 *
             std::max(1.0, rep.g_range + rep.grad_gphi_l3);
    rep.c6 = rep.sigma_hi *
             ((1.0 + c9) * (c8 * rep.grad_phi_l3 + c8 * rep.grad_gphi_l3) + rep.g_range);
    rep.threshold = (1.0 - delta) * (1.0 - delta) * rep.sigma_lo /
                    (rep.c6 + (1.0 - delta) * rep.sigma_lo);
    rep.satisfied = rep.c5 <= rep.threshold;
    return rep;
}

std::string to_string(const SmallDataReport& rep) {
    std::ostringstream os;
    os.precision(12);
    os << "small-data check\n";
    os << "  C5            = " << rep.c5 << '\n';
    os << "  C6            = " << rep.c6 << '\n';
    os << "  threshold     = " << rep.threshold << '\n';
    os << "  satisfied     = " << (rep.satisfied ? "yes" : "no") << '\n';
    os << "  C7, C8, C9    = " << rep.c7 << ", " << rep.c8 << ", " << rep.c9 << '\n';
    os << "  delta         = " << rep.delta << '\n';
    os << "  |grad phi|_L3 = " << rep.grad_phi_l3 << " (discrete stand-in)\n";
    os << "  |grad g|_L3   = " << rep.grad_gphi_l3 << '\n';
    os << "  g^o - g_o     = " << rep.g_range << '\n';
    os << "  sigma range   = [" << rep.sigma_lo << ", " << rep.sigma_hi << "]\n";
    return os.str();
}

} // namespace joule
