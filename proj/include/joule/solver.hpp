#pragma once

#include "joule/assembly.hpp"
#include "joule/space.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace joule {

struct CgStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients down to a relative residual of
/// tol. Throws SolverError (carrying the final residual) when maxit is
/// exhausted or a non-finite value shows up.
std::vector<double> solve_spd(const Csr& matrix, std::span<const double> rhs, double tol,
                              int maxit, CgStats* stats = nullptr);

/// Pair of discretization spaces on one shared mesh; degrees may differ.
struct Spaces {
    std::shared_ptr<const FunctionSpace> phi;
    std::shared_ptr<const FunctionSpace> u;
};

struct PicardState {
    FeFunction phi;
    FeFunction u;
    int iteration = 0;
    double increment_norm = std::numeric_limits<double>::infinity();
    std::vector<double> history; // increment norms, one per iteration
};

struct LinearSolveStats {
    int cg_iterations_phi = 0;
    double residual_phi = 0.0;
    int cg_iterations_u = 0;
    double residual_u = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double final_increment = 0.0;
    std::vector<LinearSolveStats> linear_stats;
    /// max over all iterations of the X-norm of the homogenized iterate
    /// (phi_k - I_h g_phi, u_k - I_h g_u); stays bounded under refinement.
    double iterate_norm_max = 0.0;
};

struct PicardOptions {
    double tol = 1e-8;
    int max_iterations = 50;
    double damping = 1.0; // u <- damping*u_new + (1-damping)*u_old
    double linear_tol_factor = 0.01;
    int linear_maxit = 20000;
    int threads = 1;
};

/// One application of the decoupled fixed-point map: with v_hat = state.u,
/// solve the potential system, then the temperature system with the fresh
/// potential; the increment norm is the X-norm of the update.
PicardState picard_step(const PicardState& state, const ProblemData& data, const Spaces& spaces,
                        const PicardOptions& opts, LinearSolveStats* stats = nullptr);

/// Fixed-point iteration until increment <= tol * (1 + X-norm of the state)
/// or the iteration budget is spent; non-convergence is reported, not thrown.
std::pair<PicardState, SolveReport> solve_joule(const ProblemData& data, const Spaces& spaces,
                                                const PicardOptions& opts = {});

/// || (phi, u) ||_X = sqrt(||phi||_H1^2 + ||u||_H1^2)
double x_norm(const FeFunction& phi, const FeFunction& u);

} // namespace joule
