#pragma once

#include "joule/adapt.hpp"
#include "joule/estimate.hpp"
#include "joule/expr.hpp"
#include "joule/solver.hpp"

#include <iosfwd>
#include <vector>

namespace joule {

/// Prescribed exact fields of a manufactured problem (functions of x, y, z).
struct ExactSolution {
    Expr phi;
    Expr u;
};

/// Derives sources and boundary data so that (phi*, u*) solves the coupled
/// system: f_phi = -div(sigma(u*) grad phi*), f_u = -lap u* -
/// sigma(u*) |grad phi*|^2, g_phi = phi*, g_u = u*, h = kappa u* + du*/dnu.
/// The Dirichlet bounds are the sampled range of phi* over the whole mesh, so
/// the truncation is inactive at the exact solution.
ProblemData mms_problem(const Expr& exact_phi, const Expr& exact_u,
                        const Conductivity& conductivity, const Mesh& mesh,
                        const Expr& kappa = Expr());

struct ConvergenceRow {
    double h_max = 0.0;
    int ndofs = 0; // both fields
    double err_phi_h1 = 0.0;
    double err_u_h1 = 0.0;
    double err_phi_l2 = 0.0;
    double err_u_l2 = 0.0;
    double estimator_total = 0.0;
    double effectivity = 0.0; // estimator_total / X-norm error
    int picard_iterations = 0;
    double iterate_norm_max = 0.0;
    double overshoot = 0.0; // nodal excess of phi_n over [g_lo, g_hi]
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    bool truncated = false; // Picard failed at the next level
};

/// rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1})
std::vector<double> rates(const ConvergenceTable& table, double ConvergenceRow::* column);

/// Uniform refinement sequence (each level bisects every cell dim times, so
/// h halves) with per-level solves, error norms against the exact fields and
/// estimator totals. Picard failure truncates the table.
ConvergenceTable convergence_study(const ProblemData& data, const ExactSolution& exact,
                                   const Mesh& initial_mesh, int levels, int degree_phi,
                                   int degree_u, const PicardOptions& opts = {});

void write_convergence_csv(const ConvergenceTable& table, std::ostream& os);

struct SmallDataReport {
    double c5 = 0.0;
    double c6 = 0.0;
    double threshold = 0.0;
    bool satisfied = false;
    // echoed inputs
    double c7 = 0.0, c8 = 0.0, c9 = 0.0, delta = 0.0;
    double grad_phi_l3 = 0.0;   // discrete stand-in for the continuous norm
    double grad_gphi_l3 = 0.0;
    double g_range = 0.0;       // g_hi - g_lo
    double sigma_lo = 0.0, sigma_hi = 0.0;
};

/// Checks the uniqueness/quasi-optimality condition
/// c5 <= (1-delta)^2 sigma_lo / (c6 + (1-delta) sigma_lo) with
/// c5 = c7 c8 (1+c9) ||grad phi_n||_L3 max(1, g_range + ||grad g_phi||_L3),
/// c6 = sigma_hi ((1+c9)(c8 ||grad phi_n||_L3 + c8 ||grad g_phi||_L3) + g_range).
SmallDataReport small_data_check(const FeFunction& phi_n, const ProblemData& data, double c7,
                                 double c8, double c9, double delta);

std::string to_string(const SmallDataReport& report);

/// Full H1 / L2 error of an FE function against an expression.
double error_h1_expr(const FeFunction& fun, const Expr& exact, int quad_degree);
double error_l2_expr(const FeFunction& fun, const Expr& exact, int quad_degree);

/// Nodal overshoot of phi over the declared Dirichlet bounds:
/// max(0, max phi - g_hi) + max(0, g_lo - min phi).
double nodal_overshoot(const FeFunction& phi, double g_lo, double g_hi);

} // namespace joule
