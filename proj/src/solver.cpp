#include "joule/solver.hpp"

#include "joule/errors.hpp"

#include <algorithm>
#include <cmath>

namespace joule {

std::vector<double> solve_spd(const Csr& matrix, std::span<const double> rhs, double tol,
                              int maxit, CgStats* stats) {
    if (!(tol > 0.0)) throw ArgumentError("solve_spd: tol must be positive");
    const int n = matrix.n;
    std::vector<double> x(n, 0.0);
    double bnorm = 0.0;
    for (double v : rhs) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    if (stats) *stats = {};
    if (bnorm == 0.0) return x;

    std::vector<double> diag = matrix.diagonal();
    for (double& d : diag) d = (d > 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r(rhs.begin(), rhs.end());
    std::vector<double> z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = diag[i] * r[i];
    p = z;
    double rz = 0.0;
    for (int i = 0; i < n; ++i) rz += r[i] * z[i];

    double rnorm = bnorm;
    for (int it = 1; it <= maxit; ++it) {
        matrix.multiply(p, Ap);
        double pAp = 0.0;
        for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
        if (!std::isfinite(pAp) || pAp <= 0.0)
            throw SolverError("solve_spd: matrix is not positive definite along a search direction",
                              rnorm / bnorm);
        const double alpha = rz / pAp;
        rnorm = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
            rnorm += r[i] * r[i];
        }
        rnorm = std::sqrt(rnorm);
        if (!std::isfinite(rnorm)) throw SolverError("solve_spd: non-finite residual", rnorm);
        if (stats) {
            stats->iterations = it;
            stats->relative_residual = rnorm / bnorm;
        }
        if (rnorm <= tol * bnorm) return x;
        double rz_new = 0.0;
        for (int i = 0; i < n; ++i) {
            z[i] = diag[i] * r[i];
            rz_new += r[i] * z[i];
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("solve_spd: no convergence within " + std::to_string(maxit) + " iterations",
                      rnorm / bnorm);
}

double x_norm(const FeFunction& phi, const FeFunction& u) {
    const double np = norm_h1(phi);
    const double nu = norm_h1(u);
    return std::sqrt(np * np + nu * nu);
}

namespace {

FeFunction difference(const FeFunction& a, const FeFunction& b) {
    FeFunction d{a.space, a.coeffs};
    for (std::size_t i = 0; i < d.coeffs.size(); ++i) d.coeffs[i] -= b.coeffs[i];
    return d;
}

} // namespace

PicardState picard_step(const PicardState& state, const ProblemData& data, const Spaces& spaces,
                        const PicardOptions& opts, LinearSolveStats* stats) {
    const double lin_tol = std::max(opts.linear_tol_factor * std::min(opts.tol, 1.0), 1e-14);
    const FeFunction& v_hat = state.u;

    SparseSystem phi_sys = assemble_phi(*spaces.phi, v_hat, data, opts.threads);
    CgStats cg_phi;
    std::vector<double> phi_free = solve_spd(phi_sys.matrix, phi_sys.rhs, lin_tol,
                                             opts.linear_maxit, &cg_phi);
    FeFunction phi_new{spaces.phi, phi_sys.expand(phi_free)};

    SparseSystem u_sys = assemble_u(*spaces.u, data, opts.threads);
    std::vector<double> load = assemble_u_rhs(*spaces.u, phi_new, v_hat, data, opts.threads);
    for (std::size_t i = 0; i < load.size(); ++i) load[i] += u_sys.rhs[i];
    CgStats cg_u;
    std::vector<double> u_free = solve_spd(u_sys.matrix, load, lin_tol, opts.linear_maxit, &cg_u);
    FeFunction u_new{spaces.u, u_sys.expand(u_free)};
    if (opts.damping != 1.0) {
        for (std::size_t i = 0; i < u_new.coeffs.size(); ++i)
            u_new.coeffs[i] = opts.damping * u_new.coeffs[i] + (1.0 - opts.damping) * state.u.coeffs[i];
    }

    if (stats) *stats = {cg_phi.iterations, cg_phi.relative_residual, cg_u.iterations, cg_u.relative_residual};

    PicardState next{std::move(phi_new), std::move(u_new), state.iteration + 1, 0.0, state.history};
    next.increment_norm = x_norm(difference(next.phi, state.phi), difference(next.u, state.u));
    next.history.push_back(next.increment_norm);
    return next;
}

std::pair<PicardState, SolveReport> solve_joule(const ProblemData& data, const Spaces& spaces,
                                                const PicardOptions& opts) {
    if (!(opts.tol > 0.0)) throw ArgumentError("solve_joule: tol must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw ArgumentError("solve_joule: damping must be in (0, 1]");

    // Initial iterate: g_u on the Dirichlet-u dofs, zero elsewhere; the
    // potential follows from one solve with that temperature.
    FeFunction u0{spaces.u, std::vector<double>(spaces.u->ndofs(), 0.0)};
    for (int d : spaces.u->dirichlet_dofs_u()) u0.coeffs[d] = data.g_u(spaces.u->dof_node(d));

    const double lin_tol = std::max(opts.linear_tol_factor * std::min(opts.tol, 1.0), 1e-14);
    SparseSystem phi_sys = assemble_phi(*spaces.phi, u0, data, opts.threads);
    std::vector<double> phi_free = solve_spd(phi_sys.matrix, phi_sys.rhs, lin_tol, opts.linear_maxit);
    PicardState state{FeFunction{spaces.phi, phi_sys.expand(phi_free)}, std::move(u0), 0,
                      std::numeric_limits<double>::infinity(), {}};

    // Homogenized-iterate norms mirror the boundedness of the fixed-point
    // map; the seed state is not an image of the map and stays out of the
    // maximum (its zero-extension of g_u carries an O(h^-1/2) layer).
    FeFunction gphi_h = interpolate(spaces.phi, data.g_phi);
    FeFunction gu_h = interpolate(spaces.u, data.g_u);

    SolveReport report;

    while (state.iteration < opts.max_iterations) {
        LinearSolveStats stats;
        state = picard_step(state, data, spaces, opts, &stats);
        report.linear_stats.push_back(stats);
        report.iterations = state.iteration;
        report.final_increment = state.increment_norm;
        report.iterate_norm_max = std::max(
            report.iterate_norm_max, x_norm(difference(state.phi, gphi_h), difference(state.u, gu_h)));
        if (state.increment_norm <= opts.tol * (1.0 + x_norm(state.phi, state.u))) {
            report.converged = true;
            break;
        }
    }
    return {std::move(state), std::move(report)};
}

} // namespace joule
