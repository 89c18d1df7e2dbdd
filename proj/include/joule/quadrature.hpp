#pragma once

#include "joule/geometry.hpp"

#include <vector>

namespace joule {

/// Quadrature rule on the reference simplex of the given dimension
/// (unit interval, unit triangle, unit tetrahedron). Weights are positive and
/// sum to the reference volume; polynomials up to `degree` are integrated
/// exactly.
struct QuadratureRule {
    int dim = 0;
    int degree = 0;
    std::vector<Vec3> points;
    std::vector<double> weights;

    std::size_t size() const { return points.size(); }
};

/// Collapsed (Duffy-type) Gauss rule, exact for total degree <= degree.
QuadratureRule simplex_quadrature(int dim, int degree);

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights);

} // namespace joule
