#include "joule/space.hpp"

#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

namespace joule {

namespace {

// Local edge numbering shared by P2 dof layout and Dirichlet identification.
constexpr int tri_edges[3][2] = {{0, 1}, {0, 2}, {1, 2}};
constexpr int tet_edges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

void barycentric(int dim, const Vec3& ref, double lambda[4]) {
    lambda[0] = 1.0;
    for (int i = 0; i < dim; ++i) {
        lambda[i + 1] = ref[i];
        lambda[0] -= ref[i];
    }
}

void barycentric_gradients(int dim, Vec3 grads[4]) {
    grads[0] = {0, 0, 0};
    for (int i = 0; i < dim; ++i) {
        grads[0][i] = -1.0;
        grads[i + 1] = {0, 0, 0};
        grads[i + 1][i] = 1.0;
    }
}

} // namespace

FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree) {
    if (degree_ != 1 && degree_ != 2) throw ArgumentError("FunctionSpace: degree must be 1 or 2");
    const Mesh& m = *mesh_;
    const int dim = m.dim();
    const int nvert_local = dim + 1;
    const int nedge_local = dim == 2 ? 3 : 6;
    dofs_per_cell_ = degree_ == 1 ? nvert_local : nvert_local + nedge_local;

    // vertex dofs coincide with vertex ids
    ndofs_ = m.num_vertices();
    dof_nodes_.assign(m.vertices().begin(), m.vertices().end());

    std::map<std::array<int, 2>, int> edge_ids;
    auto edge_dof = [&](int a, int b) {
        std::array<int, 2> key{std::min(a, b), std::max(a, b)};
        auto [it, inserted] = edge_ids.emplace(key, ndofs_);
        if (inserted) {
            ++ndofs_;
            dof_nodes_.push_back(0.5 * (m.vertex(a) + m.vertex(b)));
        }
        return it->second;
    };

    cell_dofs_.resize(static_cast<std::size_t>(m.num_cells()) * dofs_per_cell_);
    for (int c = 0; c < m.num_cells(); ++c) {
        auto cell = m.cell(c);
        int* dofs = cell_dofs_.data() + static_cast<std::size_t>(c) * dofs_per_cell_;
        for (int i = 0; i < nvert_local; ++i) dofs[i] = cell[i];
        if (degree_ == 2) {
            for (int e = 0; e < nedge_local; ++e) {
                const int* ev = dim == 2 ? tri_edges[e] : tet_edges[e];
                dofs[nvert_local + e] = edge_dof(cell[ev[0]], cell[ev[1]]);
            }
        }
    }

    // A dof is constrained when its support node lies on a facet carrying the
    // respective Dirichlet tag.
    std::set<int> dphi, du;
    for (const auto& bf : m.boundary_facets()) {
        const bool is_phi = bf.phi_tag == PhiTag::dirichlet;
        const bool is_u = bf.u_tag == UTag::dirichlet;
        if (!is_phi && !is_u) continue;
        for (int i = 0; i < dim; ++i) {
            if (is_phi) dphi.insert(bf.verts[i]);
            if (is_u) du.insert(bf.verts[i]);
        }
        if (degree_ == 2) {
            const int nfe = dim == 2 ? 1 : 3;
            for (int e = 0; e < nfe; ++e) {
                int a, b;
                if (dim == 2) {
                    a = bf.verts[0];
                    b = bf.verts[1];
                } else {
                    constexpr int fe[3][2] = {{0, 1}, {0, 2}, {1, 2}};
                    a = bf.verts[fe[e][0]];
                    b = bf.verts[fe[e][1]];
                }
                std::array<int, 2> key{std::min(a, b), std::max(a, b)};
                auto it = edge_ids.find(key);
                if (it != edge_ids.end()) {
                    if (is_phi) dphi.insert(it->second);
                    if (is_u) du.insert(it->second);
                }
            }
        }
    }
    dirichlet_phi_.assign(dphi.begin(), dphi.end());
    dirichlet_u_.assign(du.begin(), du.end());
}

void FunctionSpace::basis_values(const Vec3& ref, std::span<double> out) const {
    const int dim = mesh_->dim();
    double l[4];
    barycentric(dim, ref, l);
    const int nv = dim + 1;
    if (degree_ == 1) {
        for (int i = 0; i < nv; ++i) out[i] = l[i];
        return;
    }
    for (int i = 0; i < nv; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const int* ev = dim == 2 ? tri_edges[e] : tet_edges[e];
        out[nv + e] = 4.0 * l[ev[0]] * l[ev[1]];
    }
}

void FunctionSpace::basis_ref_gradients(const Vec3& ref, std::span<Vec3> out) const {
    const int dim = mesh_->dim();
    double l[4];
    Vec3 gl[4];
    barycentric(dim, ref, l);
    barycentric_gradients(dim, gl);
    const int nv = dim + 1;
    if (degree_ == 1) {
        for (int i = 0; i < nv; ++i) out[i] = gl[i];
        return;
    }
    for (int i = 0; i < nv; ++i) out[i] = (4.0 * l[i] - 1.0) * gl[i];
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const int* ev = dim == 2 ? tri_edges[e] : tet_edges[e];
        out[nv + e] = 4.0 * (l[ev[0]] * gl[ev[1]] + l[ev[1]] * gl[ev[0]]);
    }
}

void FunctionSpace::basis_laplacians(const AffineMap& map, std::span<double> out) const {
    const int dim = mesh_->dim();
    const int nv = dim + 1;
    if (degree_ == 1) {
        for (int i = 0; i < dofs_per_cell_; ++i) out[i] = 0.0;
        return;
    }
    Vec3 gl[4];
    barycentric_gradients(dim, gl);
    // M[i][j] = sum_k inv[i][k] inv[j][k]; Laplacian of a product of affine
    // functions follows from the constant reference Hessians of P2.
    double M[4][4];
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            M[i][j] = 0.0;
            for (int k = 0; k < dim; ++k) M[i][j] += map.inv[i][k] * map.inv[j][k];
        }
    auto hess_trace = [&](const Vec3& ga, const Vec3& gb) {
        double t = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) t += ga[i] * gb[j] * M[i][j];
        return t;
    };
    for (int i = 0; i < nv; ++i) out[i] = 4.0 * hess_trace(gl[i], gl[i]);
    const int ne = dim == 2 ? 3 : 6;
    for (int e = 0; e < ne; ++e) {
        const int* ev = dim == 2 ? tri_edges[e] : tet_edges[e];
        out[nv + e] = 8.0 * hess_trace(gl[ev[0]], gl[ev[1]]);
    }
}

double FeFunction::eval(int cell, const Vec3& ref) const {
    const int n = space->dofs_per_cell();
    double vals[10];
    space->basis_values(ref, {vals, static_cast<std::size_t>(n)});
    auto dofs = space->cell_dofs(cell);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += coeffs[dofs[i]] * vals[i];
    return s;
}

Vec3 FeFunction::grad(int cell, const Vec3& ref, const AffineMap& map) const {
    const int n = space->dofs_per_cell();
    Vec3 grads[10];
    space->basis_ref_gradients(ref, {grads, static_cast<std::size_t>(n)});
    auto dofs = space->cell_dofs(cell);
    Vec3 g_ref;
    for (int i = 0; i < n; ++i) g_ref += coeffs[dofs[i]] * grads[i];
    return map.push_gradient(g_ref);
}

double FeFunction::laplacian(int cell, const AffineMap& map) const {
    const int n = space->dofs_per_cell();
    double laps[10];
    space->basis_laplacians(map, {laps, static_cast<std::size_t>(n)});
    auto dofs = space->cell_dofs(cell);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += coeffs[dofs[i]] * laps[i];
    return s;
}

FeFunction interpolate(std::shared_ptr<const FunctionSpace> space, const ScalarField& f) {
    FeFunction fun{space, std::vector<double>(space->ndofs())};
    for (int d = 0; d < space->ndofs(); ++d) {
        double v = f(space->dof_node(d));
        if (!std::isfinite(v)) throw DataError("interpolate: non-finite value at a dof node");
        fun.coeffs[d] = v;
    }
    return fun;
}

std::vector<Vec3> eval_grad(const FeFunction& fun, int cell, std::span<const Vec3> ref_points) {
    const Mesh& m = fun.space->mesh();
    if (cell < 0 || cell >= m.num_cells()) throw ArgumentError("eval_grad: cell id out of range");
    AffineMap map = m.cell_map(cell);
    std::vector<Vec3> out;
    out.reserve(ref_points.size());
    for (const Vec3& p : ref_points) out.push_back(fun.grad(cell, p, map));
    return out;
}

namespace {

double facet_l2_norm(const FeFunction& fun, const NormKind& kind) {
    const Mesh& m = fun.space->mesh();
    FacetSets sets = facet_sets(m);
    QuadratureRule rule = simplex_quadrature(m.dim() - 1, 2 * fun.space->degree() + 2);
    double acc = 0.0;
    for (std::size_t bi = 0; bi < sets.boundary.size(); ++bi) {
        const bool phi_match = kind.phi_filter && sets.boundary_phi_tag[bi] == *kind.phi_filter;
        const bool u_match = kind.u_filter && sets.boundary_u_tag[bi] == *kind.u_filter;
        const bool no_filter = !kind.phi_filter && !kind.u_filter;
        if (!(no_filter || phi_match || u_match)) continue;
        const Facet& f = sets.boundary[bi];
        const int cell = f.cell_plus;
        AffineMap map = m.cell_map(cell);
        const double scale = f.measure * (m.dim() == 2 ? 1.0 : 2.0);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Vec3 p;
            if (m.dim() == 2) {
                double t = rule.points[q].x;
                p = (1.0 - t) * m.vertex(f.verts[0]) + t * m.vertex(f.verts[1]);
            } else {
                double a = rule.points[q].x, b = rule.points[q].y;
                p = (1.0 - a - b) * m.vertex(f.verts[0]) + a * m.vertex(f.verts[1]) +
                    b * m.vertex(f.verts[2]);
            }
            double v = fun.eval(cell, map.to_reference(p));
            acc += scale * rule.weights[q] * v * v;
        }
    }
    return std::sqrt(acc);
}

} // namespace

double norm(const FeFunction& fun, const NormKind& kind) {
    const Mesh& m = fun.space->mesh();
    const int k = fun.space->degree();
    if (kind.type == NormKind::l2_boundary) return facet_l2_norm(fun, kind);

    const int degree = kind.type == NormKind::l3_grad ? 3 * k : 2 * k;
    QuadratureRule rule = simplex_quadrature(m.dim(), degree);
    double acc = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        AffineMap map = m.cell_map(c);
        const double jac = std::abs(map.det);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            switch (kind.type) {
                case NormKind::l2: {
                    double v = fun.eval(c, rule.points[q]);
                    acc += jac * rule.weights[q] * v * v;
                    break;
                }
                case NormKind::h1_semi: {
                    Vec3 g = fun.grad(c, rule.points[q], map);
                    acc += jac * rule.weights[q] * dot(g, g);
                    break;
                }
                case NormKind::l3_grad: {
                    Vec3 g = fun.grad(c, rule.points[q], map);
                    acc += jac * rule.weights[q] * std::pow(norm(g), 3.0);
                    break;
                }
                default: throw ArgumentError("norm: unknown kind");
            }
        }
    }
    return kind.type == NormKind::l3_grad ? std::cbrt(acc) : std::sqrt(acc);
}

double norm_h1(const FeFunction& fun) {
    double l2 = norm(fun, NormKind::L2());
    double semi = norm(fun, NormKind::H1Semi());
    return std::sqrt(l2 * l2 + semi * semi);
}

double error_l2(const FeFunction& fun, const ScalarField& exact, int quad_degree) {
    const Mesh& m = fun.space->mesh();
    QuadratureRule rule = simplex_quadrature(m.dim(), quad_degree);
    double acc = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        AffineMap map = m.cell_map(c);
        const double jac = std::abs(map.det);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double diff = fun.eval(c, rule.points[q]) - exact(map.to_physical(rule.points[q]));
            acc += jac * rule.weights[q] * diff * diff;
        }
    }
    return std::sqrt(acc);
}

double error_h1_semi(const FeFunction& fun, const VectorField& exact_grad, int quad_degree) {
    const Mesh& m = fun.space->mesh();
    QuadratureRule rule = simplex_quadrature(m.dim(), quad_degree);
    double acc = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
        AffineMap map = m.cell_map(c);
        const double jac = std::abs(map.det);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Vec3 diff = fun.grad(c, rule.points[q], map) - exact_grad(map.to_physical(rule.points[q]));
            acc += jac * rule.weights[q] * dot(diff, diff);
        }
    }
    return std::sqrt(acc);
}

} // namespace joule
