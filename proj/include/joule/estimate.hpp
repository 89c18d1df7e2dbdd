#pragma once

#include "joule/problem.hpp"
#include "joule/space.hpp"

#include <iosfwd>
#include <vector>

namespace joule {

/// Residual error indicators. Cell arrays align with mesh cell ids; facet
/// arrays align with the stored FacetSets lists (eta_e_interior with
/// facets.interior, eta_e_neumann with facets.neumann_phi, rho_e_robin with
/// facets.robin_u).
struct EstimatorReport {
    std::vector<double> eta_t;          // element residual of the potential equation
    std::vector<double> rho_t;          // element residual of the temperature equation
    std::vector<double> eta_e_interior; // flux jump of sigma(u) grad phi
    std::vector<double> rho_e_interior; // flux jump of grad u + sigma cutoff grad phi
    std::vector<double> eta_e_neumann;  // Neumann residual of the potential
    std::vector<double> rho_e_robin;    // Robin residual of the temperature
    std::vector<double> h_cell;
    /// Squared indicator mass per cell: h_T^2 (eta_T^2 + rho_T^2) plus half of
    /// each adjacent interior facet's weighted mass, boundary facets fully.
    std::vector<double> per_cell_total;
    double weighted_total = 0.0;
    FacetSets facets;
};

/// Evaluates all six indicator families at (phi_n, u_n).
EstimatorReport estimate(const FeFunction& phi_n, const FeFunction& u_n, const ProblemData& data,
                         int threads = 1);

/// sqrt of the h-weighted squared sums; recomputed from the stored arrays.
double total(const EstimatorReport& report);

/// One row per cell and per facet.
void write_estimator_csv(const EstimatorReport& report, std::ostream& os);

} // namespace joule
