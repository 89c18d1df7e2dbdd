#pragma once

#include "joule/problem.hpp"
#include "joule/space.hpp"
#include "joule/sparse.hpp"

#include <vector>

namespace joule {

/// Linear system on the free dofs of a space after symmetric elimination of
/// the Dirichlet dofs; the lifted Dirichlet contribution sits in `rhs`.
struct SparseSystem {
    Csr matrix;
    std::vector<double> rhs;              // free-indexed
    std::vector<int> dof_of_free;         // free index -> dof id
    std::vector<int> free_of_dof;         // dof id -> free index, -1 if eliminated
    std::vector<double> dirichlet_value;  // dof-indexed; zero on free dofs
    std::vector<int> dirichlet_dofs;      // sorted

    int nfree() const { return matrix.n; }
    /// Scatter a free-dof solution back to a full coefficient vector.
    std::vector<double> expand(std::span<const double> free_values) const;
};

/// System for the potential: < sigma(v_hat) grad phi, grad psi > =
/// < f_phi, psi >, Dirichlet dofs eliminated with values interpolated from
/// g_phi; Neumann facets contribute nothing. quad_degree < 0 selects the
/// default volume exactness 2k+2.
SparseSystem assemble_phi(const FunctionSpace& space, const FeFunction& v_hat,
                          const ProblemData& data, int threads = 1, int quad_degree = -1);

/// Matrix part of the temperature system: stiffness plus the Robin boundary
/// mass < kappa u, w >; Dirichlet dofs eliminated with g_u values. Throws
/// DataError when there are no Dirichlet-u facets and kappa vanishes on the
/// whole Robin part.
SparseSystem assemble_u(const FunctionSpace& space, const ProblemData& data, int threads = 1);

/// Load vector of the temperature equation (free-indexed, same elimination as
/// assemble_u): - < sigma(v_hat) cutoff(phi_tilde) grad phi_n, grad w >
/// + < sigma(v_hat) grad g_phi . grad phi_n, w > + < h, w >_{R_u}
/// + < f_u, w > when manufactured sources are present.
std::vector<double> assemble_u_rhs(const FunctionSpace& space, const FeFunction& phi_n,
                                   const FeFunction& v_hat, const ProblemData& data,
                                   int threads = 1);

/// Runs fn(i) for i in [0, n); with threads > 1 the iterations are spread
/// over worker threads. Outputs must be written to disjoint per-i slots so the
/// subsequent ordered reduction stays deterministic.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

} // namespace joule
