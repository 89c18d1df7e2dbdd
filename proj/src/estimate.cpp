#include "joule/estimate.hpp"

#include "joule/assembly.hpp"
#include "joule/errors.hpp"
#include "joule/quadrature.hpp"

#include <cmath>
#include <ostream>

namespace joule {

namespace {

struct FacetQuad {
    std::vector<Vec3> points; // physical
    std::vector<double> weights; // includes the physical/reference scale
};

FacetQuad facet_quadrature(const Mesh& mesh, const Facet& f, const QuadratureRule& rule) {
    FacetQuad fq;
    const double scale = f.measure * (mesh.dim() == 2 ? 1.0 : 2.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        Vec3 p;
        if (mesh.dim() == 2) {
            p = (1.0 - rule.points[q].x) * mesh.vertex(f.verts[0]) +
                rule.points[q].x * mesh.vertex(f.verts[1]);
        } else {
            p = (1.0 - rule.points[q].x - rule.points[q].y) * mesh.vertex(f.verts[0]) +
                rule.points[q].x * mesh.vertex(f.verts[1]) + rule.points[q].y * mesh.vertex(f.verts[2]);
        }
        fq.points.push_back(p);
        fq.weights.push_back(scale * rule.weights[q]);
    }
    return fq;
}

} // namespace

EstimatorReport estimate(const FeFunction& phi_n, const FeFunction& u_n, const ProblemData& data,
                         int threads) {
    if (phi_n.space->mesh_ptr().get() != u_n.space->mesh_ptr().get())
        throw ArgumentError("estimate: phi_n and u_n live on different meshes");
    const Mesh& mesh = phi_n.space->mesh();
    const Conductivity& sigma = data.conductivity;

    EstimatorReport rep;
    rep.facets = facet_sets(mesh);
    rep.eta_t.assign(mesh.num_cells(), 0.0);
    rep.rho_t.assign(mesh.num_cells(), 0.0);
    rep.h_cell.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) rep.h_cell[c] = mesh.cell_diameter(c);

    const int kmax = std::max(phi_n.space->degree(), u_n.space->degree());
    const QuadratureRule vrule = simplex_quadrature(mesh.dim(), 2 * kmax + 2);

    // element residuals; the divergence is expanded at quadrature points, the
    // cutoff contributes its a.e. gradient (indicator times grad phi minus
    // grad g_phi)
    parallel_for(mesh.num_cells(), threads, [&](int c) {
        const AffineMap map = mesh.cell_map(c);
        const double jac = std::abs(map.det);
        const double lap_phi = phi_n.laplacian(c, map);
        const double lap_u = u_n.laplacian(c, map);
        double eta_sq = 0.0, rho_sq = 0.0;
        for (std::size_t q = 0; q < vrule.size(); ++q) {
            const Vec3& ref = vrule.points[q];
            const Vec3 x = map.to_physical(ref);
            const double uval = u_n.eval(c, ref);
            const double s = sigma.value(uval);
            const double ds = sigma.derivative(uval);
            const Vec3 ugrad = u_n.grad(c, ref, map);
            const Vec3 pgrad = phi_n.grad(c, ref, map);
            const double phival = phi_n.eval(c, ref);
            const double gphi = data.g_phi(x);
            const Vec3 ggrad = data.grad_g_phi(x);

            double div_sigma_grad = ds * dot(ugrad, pgrad) + s * lap_phi;
            double r_phi = div_sigma_grad + (data.f_phi ? data.f_phi(x) : 0.0);
            eta_sq += jac * vrule.weights[q] * r_phi * r_phi;

            const double cut = cutoff(phival - gphi, gphi, data.g_lo, data.g_hi);
            const double factor = cutoff_grad_factor(phival, data.g_lo, data.g_hi);
            const Vec3 cut_grad = factor * pgrad - ggrad;
            // div(grad u + sigma*cut*grad phi)
            double div_flux = lap_u + cut * ds * dot(ugrad, pgrad) + s * dot(cut_grad, pgrad) +
                              s * cut * lap_phi;
            double r_u = div_flux + s * dot(ggrad, pgrad) + (data.f_u ? data.f_u(x) : 0.0);
            rho_sq += jac * vrule.weights[q] * r_u * r_u;
        }
        rep.eta_t[c] = std::sqrt(eta_sq);
        rep.rho_t[c] = std::sqrt(rho_sq);
    });

    const QuadratureRule frule = simplex_quadrature(mesh.dim() - 1, kmax + 2);

    // interior jumps
    const auto& interior = rep.facets.interior;
    rep.eta_e_interior.assign(interior.size(), 0.0);
    rep.rho_e_interior.assign(interior.size(), 0.0);
    parallel_for(static_cast<int>(interior.size()), threads, [&](int fi) {
        const Facet& f = interior[fi];
        const FacetQuad fq = facet_quadrature(mesh, f, frule);
        const AffineMap map_p = mesh.cell_map(f.cell_plus);
        const AffineMap map_m = mesh.cell_map(f.cell_minus);
        double eta_sq = 0.0, rho_sq = 0.0;
        for (std::size_t q = 0; q < fq.points.size(); ++q) {
            const Vec3& x = fq.points[q];
            const Vec3 ref_p = map_p.to_reference(x);
            const Vec3 ref_m = map_m.to_reference(x);
            const double u_p = u_n.eval(f.cell_plus, ref_p);
            const double u_m = u_n.eval(f.cell_minus, ref_m);
            const Vec3 pgrad_p = phi_n.grad(f.cell_plus, ref_p, map_p);
            const Vec3 pgrad_m = phi_n.grad(f.cell_minus, ref_m, map_m);
            const Vec3 ugrad_p = u_n.grad(f.cell_plus, ref_p, map_p);
            const Vec3 ugrad_m = u_n.grad(f.cell_minus, ref_m, map_m);

            const double jump_eta =
                dot(f.normal, sigma.value(u_p) * pgrad_p - sigma.value(u_m) * pgrad_m);
            eta_sq += fq.weights[q] * jump_eta * jump_eta;

            // sigma(u_n) cutoff(phi_tilde) is continuous; evaluated from the plus side
            const double gphi = data.g_phi(x);
            const double phival = phi_n.eval(f.cell_plus, ref_p);
            const double cut = cutoff(phival - gphi, gphi, data.g_lo, data.g_hi);
            const double s = sigma.value(u_p);
            const double jump_rho =
                dot(f.normal, (ugrad_p - ugrad_m) + s * cut * (pgrad_p - pgrad_m));
            rho_sq += fq.weights[q] * jump_rho * jump_rho;
        }
        rep.eta_e_interior[fi] = std::sqrt(eta_sq);
        rep.rho_e_interior[fi] = std::sqrt(rho_sq);
    });

    // Neumann residual of the potential
    rep.eta_e_neumann.assign(rep.facets.neumann_phi.size(), 0.0);
    for (std::size_t k = 0; k < rep.facets.neumann_phi.size(); ++k) {
        const Facet& f = rep.facets.boundary[rep.facets.neumann_phi[k]];
        const FacetQuad fq = facet_quadrature(mesh, f, frule);
        const AffineMap map = mesh.cell_map(f.cell_plus);
        double acc = 0.0;
        for (std::size_t q = 0; q < fq.points.size(); ++q) {
            const Vec3 ref = map.to_reference(fq.points[q]);
            const double s = sigma.value(u_n.eval(f.cell_plus, ref));
            const double r = dot(f.normal, s * phi_n.grad(f.cell_plus, ref, map));
            acc += fq.weights[q] * r * r;
        }
        rep.eta_e_neumann[k] = std::sqrt(acc);
    }

    // Robin residual of the temperature
    rep.rho_e_robin.assign(rep.facets.robin_u.size(), 0.0);
    for (std::size_t k = 0; k < rep.facets.robin_u.size(); ++k) {
        const Facet& f = rep.facets.boundary[rep.facets.robin_u[k]];
        const FacetQuad fq = facet_quadrature(mesh, f, frule);
        const AffineMap map = mesh.cell_map(f.cell_plus);
        double acc = 0.0;
        for (std::size_t q = 0; q < fq.points.size(); ++q) {
            const Vec3& x = fq.points[q];
            const Vec3 ref = map.to_reference(x);
            const double uval = u_n.eval(f.cell_plus, ref);
            const double s = sigma.value(uval);
            const double gphi = data.g_phi(x);
            const double cut = cutoff(phi_n.eval(f.cell_plus, ref) - gphi, gphi, data.g_lo, data.g_hi);
            const Vec3 flux = u_n.grad(f.cell_plus, ref, map) +
                              s * cut * phi_n.grad(f.cell_plus, ref, map);
            const double r = dot(f.normal, flux) + data.kappa(x) * uval - data.h_robin(x, f.normal);
            acc += fq.weights[q] * r * r;
        }
        rep.rho_e_robin[k] = std::sqrt(acc);
    }

    // distribute weighted squared masses to cells
    rep.per_cell_total.assign(mesh.num_cells(), 0.0);
    for (int c = 0; c < mesh.num_cells(); ++c)
        rep.per_cell_total[c] =
            rep.h_cell[c] * rep.h_cell[c] * (rep.eta_t[c] * rep.eta_t[c] + rep.rho_t[c] * rep.rho_t[c]);
    for (std::size_t fi = 0; fi < interior.size(); ++fi) {
        const Facet& f = interior[fi];
        const double mass = f.diameter * (rep.eta_e_interior[fi] * rep.eta_e_interior[fi] +
                                          rep.rho_e_interior[fi] * rep.rho_e_interior[fi]);
        rep.per_cell_total[f.cell_plus] += 0.5 * mass;
        rep.per_cell_total[f.cell_minus] += 0.5 * mass;
    }
    for (std::size_t k = 0; k < rep.facets.neumann_phi.size(); ++k) {
        const Facet& f = rep.facets.boundary[rep.facets.neumann_phi[k]];
        rep.per_cell_total[f.cell_plus] += f.diameter * rep.eta_e_neumann[k] * rep.eta_e_neumann[k];
    }
    for (std::size_t k = 0; k < rep.facets.robin_u.size(); ++k) {
        const Facet& f = rep.facets.boundary[rep.facets.robin_u[k]];
        rep.per_cell_total[f.cell_plus] += f.diameter * rep.rho_e_robin[k] * rep.rho_e_robin[k];
    }

    rep.weighted_total = total(rep);
    return rep;
}

double total(const EstimatorReport& rep) {
    double acc = 0.0;
    for (std::size_t c = 0; c < rep.eta_t.size(); ++c)
        acc += rep.h_cell[c] * rep.h_cell[c] *
               (rep.eta_t[c] * rep.eta_t[c] + rep.rho_t[c] * rep.rho_t[c]);
    for (std::size_t fi = 0; fi < rep.facets.interior.size(); ++fi)
        acc += rep.facets.interior[fi].diameter *
               (rep.eta_e_interior[fi] * rep.eta_e_interior[fi] +
                rep.rho_e_interior[fi] * rep.rho_e_interior[fi]);
    for (std::size_t k = 0; k < rep.facets.neumann_phi.size(); ++k)
        acc += rep.facets.boundary[rep.facets.neumann_phi[k]].diameter *
               rep.eta_e_neumann[k] * rep.eta_e_neumann[k];
    for (std::size_t k = 0; k < rep.facets.robin_u.size(); ++k)
        acc += rep.facets.boundary[rep.facets.robin_u[k]].diameter *
               rep.rho_e_robin[k] * rep.rho_e_robin[k];
    return std::sqrt(acc);
}

void write_estimator_csv(const EstimatorReport& rep, std::ostream& os) {
    os << "kind,id,h,eta,rho,per_cell_total\n";
    os.precision(17);
    for (std::size_t c = 0; c < rep.eta_t.size(); ++c)
        os << "cell," << c << ',' << rep.h_cell[c] << ',' << rep.eta_t[c] << ',' << rep.rho_t[c]
           << ',' << rep.per_cell_total[c] << '\n';
    for (std::size_t fi = 0; fi < rep.facets.interior.size(); ++fi)
        os << "interior," << fi << ',' << rep.facets.interior[fi].diameter << ','
           << rep.eta_e_interior[fi] << ',' << rep.rho_e_interior[fi] << ",\n";
    for (std::size_t k = 0; k < rep.facets.neumann_phi.size(); ++k)
        os << "neumann," << k << ',' << rep.facets.boundary[rep.facets.neumann_phi[k]].diameter
           << ',' << rep.eta_e_neumann[k] << ",,\n";
    for (std::size_t k = 0; k < rep.facets.robin_u.size(); ++k)
        os << "robin," << k << ',' << rep.facets.boundary[rep.facets.robin_u[k]].diameter << ",,"
           << rep.rho_e_robin[k] << ",\n";
}

} // namespace joule
