#pragma once

// Shared fixtures and brute-force oracles for the test suites. Everything in
// here is deliberately independent of the library's internal code paths: the
// checks below recompute geometry from first principles.

#include "joule/mesh.hpp"
#include "joule/problem.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <vector>

namespace joule::testing {

inline BoundaryTagger all_dirichlet() {
    return [](const Vec3&) { return std::make_pair(PhiTag::dirichlet, UTag::dirichlet); };
}

/// Dirichlet for both fields on x = 0 and x = 1, natural conditions elsewhere
/// (the decoupled benchmark tagging).
inline BoundaryTagger x_slab_dirichlet() {
    return [](const Vec3& c) {
        const bool dir = c.x < 1e-9 || c.x > 1.0 - 1e-9;
        return std::make_pair(dir ? PhiTag::dirichlet : PhiTag::neumann,
                              dir ? UTag::dirichlet : UTag::robin);
    };
}

/// sigma == 1, g_phi = x, g_u = 0, kappa = 0, h = 0 on the unit square.
inline ProblemData decoupled_benchmark_data() {
    ProblemData data;
    data.conductivity = Conductivity::constant(1.0);
    data.g_phi = [](const Vec3& p) { return p.x; };
    data.grad_g_phi = [](const Vec3&) { return Vec3{1, 0, 0}; };
    data.g_u = zero_field();
    data.h_robin = [](const Vec3&, const Vec3&) { return 0.0; };
    data.kappa = zero_field();
    data.g_lo = 0.0;
    data.g_hi = 1.0;
    return data;
}

/// L-shaped domain (-1,1)^2 minus the quadrant [0,1] x [-1,0], six squares
/// each split along its diagonal. The boundary-condition type for phi changes
/// at the re-entrant corner: Dirichlet on the crack edge y = 0 (x >= 0) and
/// the outer boundary, Neumann on the crack edge x = 0 (y <= 0).
inline Mesh l_shape_mesh() {
    std::vector<Vec3> verts;
    std::map<std::pair<int, int>, int> vid;
    auto v = [&](int i, int j) {
        auto [it, inserted] = vid.emplace(std::make_pair(i, j), static_cast<int>(verts.size()));
        if (inserted) verts.push_back({0.5 * i, 0.5 * j, 0.0});
        return it->second;
    };
    std::vector<std::array<int, 4>> cells;
    auto square = [&](int i, int j) {
        int a = v(i, j), b = v(i + 1, j), c = v(i + 1, j + 1), d = v(i, j + 1);
        cells.push_back({a, b, c, -1});
        cells.push_back({a, d, c, -1});
    };
    // squares of size 1/2 covering the L (12 squares, 24 triangles)
    for (int i = -2; i < 2; ++i)
        for (int j = -2; j < 2; ++j) {
            if (i >= 0 && j < 0) continue; // removed quadrant
            square(i, j);
        }
    BoundaryTagger tagger = [](const Vec3& c) {
        const bool on_crack_neumann = std::abs(c.x) < 1e-12 && c.y < 0.0;
        return std::make_pair(on_crack_neumann ? PhiTag::neumann : PhiTag::dirichlet,
                              UTag::dirichlet);
    };
    return mesh_from_cells(2, std::move(verts), std::move(cells), {}, tagger);
}

/// Brute-force conformity check: the vertex-set intersection of any two cells
/// spans a shared sub-simplex, and no vertex sits strictly inside another
/// cell's closure (hanging node). Quadratic cost; use on small meshes.
inline bool is_conforming(const Mesh& mesh) {
    const int dim = mesh.dim();
    // facet incidence must be 1 or 2
    std::map<std::vector<int>, int> facet_count;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        for (int drop = 0; drop <= dim; ++drop) {
            std::vector<int> facet;
            for (int i = 0; i <= dim; ++i)
                if (i != drop) facet.push_back(mesh.cell(c)[i]);
            std::sort(facet.begin(), facet.end());
            ++facet_count[facet];
        }
    }
    for (const auto& [f, n] : facet_count)
        if (n > 2) return false;

    // no hanging vertices: barycentric coordinates of every vertex w.r.t.
    // every cell not containing it must leave the closed simplex
    for (int vtx = 0; vtx < mesh.num_vertices(); ++vtx) {
        const Vec3 p = mesh.vertex(vtx);
        for (int c = 0; c < mesh.num_cells(); ++c) {
            bool is_corner = false;
            for (int i = 0; i <= dim; ++i) is_corner |= mesh.cell(c)[i] == vtx;
            if (is_corner) continue;
            const AffineMap map = mesh.cell_map(c);
            const Vec3 r = map.to_reference(p);
            double lambda0 = 1.0;
            bool inside = true;
            for (int i = 0; i < dim; ++i) {
                lambda0 -= r[i];
                inside &= r[i] >= -1e-10;
            }
            inside &= lambda0 >= -1e-10;
            if (inside) return false;
        }
    }
    return true;
}

inline double total_volume(const Mesh& mesh) {
    double v = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) v += mesh.cell_volume(c);
    return v;
}

} // namespace joule::testing
