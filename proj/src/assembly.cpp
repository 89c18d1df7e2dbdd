#include "joule/assembly.hpp"

#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

namespace joule {

namespace {

constexpr int kMaxLocal = 10; // P2 tetrahedron

struct LocalMatrix {
    double a[kMaxLocal][kMaxLocal] = {};
    double rhs[kMaxLocal] = {};
};

void init_elimination(const FunctionSpace& space, const std::vector<int>& dirichlet,
                      const ScalarField& g, SparseSystem& sys) {
    sys.dirichlet_dofs = dirichlet;
    sys.dirichlet_value.assign(space.ndofs(), 0.0);
    sys.free_of_dof.assign(space.ndofs(), -1);
    for (int d : dirichlet) {
        double v = g(space.dof_node(d));
        if (!std::isfinite(v)) throw DataError("non-finite Dirichlet value");
        sys.dirichlet_value[d] = v;
        sys.free_of_dof[d] = -2; // mark
    }
    for (int d = 0; d < space.ndofs(); ++d)
        if (sys.free_of_dof[d] == -1) {
            sys.free_of_dof[d] = static_cast<int>(sys.dof_of_free.size());
            sys.dof_of_free.push_back(d);
        } else {
            sys.free_of_dof[d] = -1;
        }
    sys.rhs.assign(sys.dof_of_free.size(), 0.0);
}

/// Scatter one element matrix + rhs into the reduced system.
void scatter(const SparseSystem& sys, SparseAccumulator& acc, std::vector<double>& rhs,
             std::span<const int> dofs, const LocalMatrix& loc) {
    const int n = static_cast<int>(dofs.size());
    for (int i = 0; i < n; ++i) {
        const int fi = sys.free_of_dof[dofs[i]];
        if (fi < 0) continue;
        rhs[fi] += loc.rhs[i];
        for (int j = 0; j < n; ++j) {
            const int fj = sys.free_of_dof[dofs[j]];
            if (fj >= 0)
                acc.add(fi, fj, loc.a[i][j]);
            else
                rhs[fi] -= loc.a[i][j] * sys.dirichlet_value[dofs[j]];
        }
    }
}

/// Facet quadrature point mapped onto the physical facet.
Vec3 facet_point(const Mesh& mesh, const Facet& f, const Vec3& ref) {
    if (mesh.dim() == 2)
        return (1.0 - ref.x) * mesh.vertex(f.verts[0]) + ref.x * mesh.vertex(f.verts[1]);
    return (1.0 - ref.x - ref.y) * mesh.vertex(f.verts[0]) + ref.x * mesh.vertex(f.verts[1]) +
           ref.y * mesh.vertex(f.verts[2]);
}

double facet_scale(const Mesh& mesh, const Facet& f) {
    return f.measure * (mesh.dim() == 2 ? 1.0 : 2.0); // physical / reference measure
}

void check_same_mesh(const FunctionSpace& a, const FeFunction& b, const char* what) {
    if (a.mesh_ptr().get() != b.space->mesh_ptr().get())
        throw ArgumentError(std::string(what) + ": functions live on different meshes");
}

/// Element loop with deterministic accumulation: local matrices are computed
/// (possibly in parallel) into per-cell slots of a block, then reduced in cell
/// order. Repeated runs are bit-identical for any thread count.
template <typename LocalFn>
void assemble_cells(const Mesh& mesh, const SparseSystem& sys, const FunctionSpace& space,
                    SparseAccumulator& acc, std::vector<double>& rhs, int threads,
                    const LocalFn& local) {
    const int block = 4096;
    std::vector<LocalMatrix> locals(std::min(block, mesh.num_cells()));
    for (int start = 0; start < mesh.num_cells(); start += block) {
        const int count = std::min(block, mesh.num_cells() - start);
        parallel_for(count, threads, [&](int i) {
            locals[i] = LocalMatrix{};
            local(start + i, locals[i]);
        });
        for (int i = 0; i < count; ++i)
            scatter(sys, acc, rhs, space.cell_dofs(start + i), locals[i]);
    }
}

} // namespace

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n < 2 * threads) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int lo = t * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

Csr SparseAccumulator::to_csr() const {
    Csr csr;
    csr.n = static_cast<int>(rows_.size());
    csr.row_ptr.resize(csr.n + 1, 0);
    for (int i = 0; i < csr.n; ++i) csr.row_ptr[i + 1] = csr.row_ptr[i] + static_cast<int>(rows_[i].size());
    csr.col.resize(csr.row_ptr[csr.n]);
    csr.val.resize(csr.row_ptr[csr.n]);
    for (int i = 0; i < csr.n; ++i) {
        auto row = rows_[i];
        std::sort(row.begin(), row.end());
        int k = csr.row_ptr[i];
        for (const auto& [c, v] : row) {
            csr.col[k] = c;
            csr.val[k] = v;
            ++k;
        }
    }
    return csr;
}

std::vector<double> SparseSystem::expand(std::span<const double> free_values) const {
    std::vector<double> full(free_of_dof.size());
    for (std::size_t d = 0; d < free_of_dof.size(); ++d)
        full[d] = free_of_dof[d] >= 0 ? free_values[free_of_dof[d]] : dirichlet_value[d];
    return full;
}

SparseSystem assemble_phi(const FunctionSpace& space, const FeFunction& v_hat,
                          const ProblemData& data, int threads, int quad_degree) {
    check_same_mesh(space, v_hat, "assemble_phi");
    const Mesh& mesh = space.mesh();
    const int nloc = space.dofs_per_cell();

    SparseSystem sys;
    init_elimination(space, space.dirichlet_dofs_phi(), data.g_phi, sys);
    SparseAccumulator acc(static_cast<int>(sys.dof_of_free.size()));

    const QuadratureRule rule =
        simplex_quadrature(mesh.dim(), quad_degree >= 0 ? quad_degree : 2 * space.degree() + 2);
    const std::size_t nq = rule.size();

    // reference basis tables, shared by all cells
    std::vector<double> vals(nq * nloc);
    std::vector<Vec3> ref_grads(nq * nloc);
    for (std::size_t q = 0; q < nq; ++q) {
        space.basis_values(rule.points[q], {vals.data() + q * nloc, static_cast<std::size_t>(nloc)});
        space.basis_ref_gradients(rule.points[q],
                                  {ref_grads.data() + q * nloc, static_cast<std::size_t>(nloc)});
    }

    assemble_cells(mesh, sys, space, acc, sys.rhs, threads, [&](int c, LocalMatrix& loc) {
        const AffineMap map = mesh.cell_map(c);
        const double jac = std::abs(map.det);
        Vec3 grads[kMaxLocal];
        for (std::size_t q = 0; q < nq; ++q) {
            for (int i = 0; i < nloc; ++i) grads[i] = map.push_gradient(ref_grads[q * nloc + i]);
            const double sigma = data.conductivity.value(v_hat.eval(c, rule.points[q]));
            const double w = jac * rule.weights[q] * sigma;
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) loc.a[i][j] += w * dot(grads[i], grads[j]);
            if (data.f_phi) {
                const double fw = jac * rule.weights[q] * data.f_phi(map.to_physical(rule.points[q]));
                for (int i = 0; i < nloc; ++i) loc.rhs[i] += fw * vals[q * nloc + i];
            }
        }
    });

    sys.matrix = acc.to_csr();
    return sys;
}

SparseSystem assemble_u(const FunctionSpace& space, const ProblemData& data, int threads) {
    const Mesh& mesh = space.mesh();
    const int nloc = space.dofs_per_cell();

    SparseSystem sys;
    init_elimination(space, space.dirichlet_dofs_u(), data.g_u, sys);
    SparseAccumulator acc(static_cast<int>(sys.dof_of_free.size()));

    const QuadratureRule rule = simplex_quadrature(mesh.dim(), 2 * space.degree() + 2);
    const std::size_t nq = rule.size();
    std::vector<Vec3> ref_grads(nq * nloc);
    for (std::size_t q = 0; q < nq; ++q)
        space.basis_ref_gradients(rule.points[q],
                                  {ref_grads.data() + q * nloc, static_cast<std::size_t>(nloc)});

    assemble_cells(mesh, sys, space, acc, sys.rhs, threads, [&](int c, LocalMatrix& loc) {
        const AffineMap map = mesh.cell_map(c);
        const double jac = std::abs(map.det);
        Vec3 grads[kMaxLocal];
        for (std::size_t q = 0; q < nq; ++q) {
            for (int i = 0; i < nloc; ++i) grads[i] = map.push_gradient(ref_grads[q * nloc + i]);
            const double w = jac * rule.weights[q];
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) loc.a[i][j] += w * dot(grads[i], grads[j]);
        }
    });

    // Robin boundary mass and the well-posedness guard
    const FacetSets sets = facet_sets(mesh);
    const QuadratureRule frule = simplex_quadrature(mesh.dim() - 1, space.degree() + 2);
    double kappa_max = 0.0;
    std::vector<double> bvals(nloc);
    for (int idx : sets.robin_u) {
        const Facet& f = sets.boundary[idx];
        const AffineMap map = mesh.cell_map(f.cell_plus);
        const double scale = facet_scale(mesh, f);
        LocalMatrix loc{};
        for (std::size_t q = 0; q < frule.size(); ++q) {
            const Vec3 x = facet_point(mesh, f, frule.points[q]);
            const double kap = data.kappa(x);
            if (kap < 0.0) throw DataError("kappa must be nonnegative");
            kappa_max = std::max(kappa_max, kap);
            space.basis_values(map.to_reference(x), {bvals.data(), static_cast<std::size_t>(nloc)});
            const double w = scale * frule.weights[q] * kap;
            for (int i = 0; i < nloc; ++i)
                for (int j = 0; j < nloc; ++j) loc.a[i][j] += w * bvals[i] * bvals[j];
        }
        scatter(sys, acc, sys.rhs, space.cell_dofs(f.cell_plus), loc);
    }

    if (sys.dirichlet_dofs.empty() && kappa_max == 0.0)
        throw DataError("temperature system is ill-posed: no Dirichlet facets and kappa == 0 on the Robin part");

    sys.matrix = acc.to_csr();
    return sys;
}

std::vector<double> assemble_u_rhs(const FunctionSpace& space, const FeFunction& phi_n,
                                   const FeFunction& v_hat, const ProblemData& data, int threads) {
    check_same_mesh(space, phi_n, "assemble_u_rhs");
    check_same_mesh(space, v_hat, "assemble_u_rhs");
    const Mesh& mesh = space.mesh();
    const int nloc = space.dofs_per_cell();

    // same elimination layout as assemble_u
    std::vector<int> free_of_dof(space.ndofs(), -1);
    int nfree = 0;
    {
        std::size_t k = 0;
        const auto& dir = space.dirichlet_dofs_u();
        for (int d = 0; d < space.ndofs(); ++d) {
            if (k < dir.size() && dir[k] == d) {
                ++k;
                continue;
            }
            free_of_dof[d] = nfree++;
        }
    }
    std::vector<double> load(nfree, 0.0);

    const int deg = 2 * std::max(space.degree(), phi_n.space->degree()) + 2;
    const QuadratureRule rule = simplex_quadrature(mesh.dim(), deg);
    const std::size_t nq = rule.size();
    std::vector<double> vals(nq * nloc);
    std::vector<Vec3> ref_grads(nq * nloc);
    for (std::size_t q = 0; q < nq; ++q) {
        space.basis_values(rule.points[q], {vals.data() + q * nloc, static_cast<std::size_t>(nloc)});
        space.basis_ref_gradients(rule.points[q],
                                  {ref_grads.data() + q * nloc, static_cast<std::size_t>(nloc)});
    }

    const int block = 4096;
    std::vector<std::array<double, kMaxLocal>> locals(std::min(block, mesh.num_cells()));
    for (int start = 0; start < mesh.num_cells(); start += block) {
        const int count = std::min(block, mesh.num_cells() - start);
        parallel_for(count, threads, [&](int i) {
            const int c = start + i;
            auto& loc = locals[i];
            loc.fill(0.0);
            const AffineMap map = mesh.cell_map(c);
            const double jac = std::abs(map.det);
            Vec3 grads[kMaxLocal];
            for (std::size_t q = 0; q < nq; ++q) {
                for (int k = 0; k < nloc; ++k) grads[k] = map.push_gradient(ref_grads[q * nloc + k]);
                const Vec3 x = map.to_physical(rule.points[q]);
                const double sigma = data.conductivity.value(v_hat.eval(c, rule.points[q]));
                const double gphi = data.g_phi(x);
                const Vec3 ggrad = data.grad_g_phi(x);
                const double tilde = phi_n.eval(c, rule.points[q]) - gphi;
                const double cut = cutoff(tilde, gphi, data.g_lo, data.g_hi);
                const Vec3 pgrad = phi_n.grad(c, rule.points[q], map);
                const double fu = data.f_u ? data.f_u(x) : 0.0;
                const double w = jac * rule.weights[q];
                const double scalar_part = sigma * dot(ggrad, pgrad) + fu;
                for (int k = 0; k < nloc; ++k)
                    loc[k] += w * (-sigma * cut * dot(pgrad, grads[k]) +
                                   scalar_part * vals[q * nloc + k]);
            }
        });
        for (int i = 0; i < count; ++i) {
            auto dofs = space.cell_dofs(start + i);
            for (int k = 0; k < nloc; ++k) {
                const int fi = free_of_dof[dofs[k]];
                if (fi >= 0) load[fi] += locals[i][k];
            }
        }
    }

    // Robin data term < h, w >
    const FacetSets sets = facet_sets(mesh);
    const QuadratureRule frule = simplex_quadrature(mesh.dim() - 1, space.degree() + 2);
    std::vector<double> bvals(nloc);
    for (int idx : sets.robin_u) {
        const Facet& f = sets.boundary[idx];
        const AffineMap map = mesh.cell_map(f.cell_plus);
        const double scale = facet_scale(mesh, f);
        auto dofs = space.cell_dofs(f.cell_plus);
        for (std::size_t q = 0; q < frule.size(); ++q) {
            const Vec3 x = facet_point(mesh, f, frule.points[q]);
            const double h = data.h_robin(x, f.normal);
            space.basis_values(map.to_reference(x), {bvals.data(), static_cast<std::size_t>(nloc)});
            const double w = scale * frule.weights[q] * h;
            for (int k = 0; k < nloc; ++k) {
                const int fi = free_of_dof[dofs[k]];
                if (fi >= 0) load[fi] += w * bvals[k];
            }
        }
    }
    return load;
}

} // namespace joule
