#pragma once

#include "joule/mesh.hpp"
#include "joule/problem.hpp"

#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace joule {

/// Continuous Lagrange space P_k, k in {1, 2}, on a simplicial mesh.
///
/// Dof ordering: vertex dofs first (dof id == vertex id), then one dof per
/// global edge for k = 2. Immutable after construction.
class FunctionSpace {
public:
    FunctionSpace(std::shared_ptr<const Mesh> mesh, int degree);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    int degree() const { return degree_; }
    int ndofs() const { return ndofs_; }
    int dofs_per_cell() const { return dofs_per_cell_; }

    std::span<const int> cell_dofs(int c) const {
        return {cell_dofs_.data() + static_cast<std::size_t>(c) * dofs_per_cell_,
                static_cast<std::size_t>(dofs_per_cell_)};
    }
    const Vec3& dof_node(int dof) const { return dof_nodes_[dof]; }

    /// Dofs whose node lies on the closed Dirichlet part of the respective
    /// partition; sorted ascending.
    const std::vector<int>& dirichlet_dofs_phi() const { return dirichlet_phi_; }
    const std::vector<int>& dirichlet_dofs_u() const { return dirichlet_u_; }

    void basis_values(const Vec3& ref, std::span<double> out) const;
    void basis_ref_gradients(const Vec3& ref, std::span<Vec3> out) const;
    /// Physical Laplacians of all local basis functions (zero for k = 1).
    void basis_laplacians(const AffineMap& map, std::span<double> out) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    int degree_;
    int ndofs_ = 0;
    int dofs_per_cell_ = 0;
    std::vector<int> cell_dofs_;
    std::vector<Vec3> dof_nodes_;
    std::vector<int> dirichlet_phi_;
    std::vector<int> dirichlet_u_;
};

/// Finite element function: coefficient vector over a FunctionSpace.
struct FeFunction {
    std::shared_ptr<const FunctionSpace> space;
    std::vector<double> coeffs;

    double eval(int cell, const Vec3& ref) const;
    Vec3 grad(int cell, const Vec3& ref, const AffineMap& map) const;
    double laplacian(int cell, const AffineMap& map) const;
};

/// Nodal interpolation: coefficient at each dof node equals f(node).
/// Throws DataError when f is non-finite at a node.
FeFunction interpolate(std::shared_ptr<const FunctionSpace> space, const ScalarField& f);

/// Physical gradients of fun at reference points of one cell.
std::vector<Vec3> eval_grad(const FeFunction& fun, int cell, std::span<const Vec3> ref_points);

struct NormKind {
    enum Type { l2, h1_semi, l2_boundary, l3_grad };
    Type type = l2;
    std::optional<PhiTag> phi_filter; // boundary norms: facets matching either filter
    std::optional<UTag> u_filter;

    static NormKind L2() { return {l2, {}, {}}; }
    static NormKind H1Semi() { return {h1_semi, {}, {}}; }
    static NormKind L3Grad() { return {l3_grad, {}, {}}; }
    static NormKind L2Boundary(std::optional<PhiTag> phi = {}, std::optional<UTag> u = {}) {
        return {l2_boundary, phi, u};
    }
};

double norm(const FeFunction& fun, const NormKind& kind);

/// sqrt(||f||_L2^2 + |f|_H1^2)
double norm_h1(const FeFunction& fun);

/// Quadrature-evaluated error norms against an analytic field.
double error_l2(const FeFunction& fun, const ScalarField& exact, int quad_degree);
double error_h1_semi(const FeFunction& fun, const VectorField& exact_grad, int quad_degree);

} // namespace joule
