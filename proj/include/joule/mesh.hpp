#pragma once

#include "joule/geometry.hpp"

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace joule {

/// Boundary condition type of a facet for the potential equation.
enum class PhiTag { dirichlet, neumann };
/// Boundary condition type of a facet for the temperature equation.
enum class UTag { dirichlet, robin };

struct BoundaryFacet {
    std::array<int, 3> verts{-1, -1, -1}; // first dim entries valid, sorted
    PhiTag phi_tag = PhiTag::dirichlet;
    UTag u_tag = UTag::dirichlet;
};

/// Assigns the (phi, u) tag pair of a boundary facet from its centroid.
using BoundaryTagger = std::function<std::pair<PhiTag, UTag>(const Vec3&)>;

/// Conforming simplicial mesh (triangles in 2D, tetrahedra in 3D).
///
/// Cells keep the vertex order required by bisection: the refinement edge of
/// a cell is always (v[0], v[dim]) and each cell carries a type tag in
/// {0, .., dim-1} that steers the Maubach/Traxler child ordering. Geometric
/// quantities use absolute volumes, so the stored order need not be
/// positively oriented. Instances are immutable; refine() returns a new mesh.
class Mesh {
public:
    Mesh(int dim, std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells,
         std::vector<int> cell_types, std::vector<BoundaryFacet> boundary_facets);

    int dim() const { return dim_; }
    int num_vertices() const { return static_cast<int>(vertices_.size()); }
    int num_cells() const { return static_cast<int>(cells_.size()); }

    const Vec3& vertex(int v) const { return vertices_[v]; }
    const std::vector<Vec3>& vertices() const { return vertices_; }

    /// Vertex ids of a cell in bisection order (dim+1 entries).
    std::span<const int> cell(int c) const { return {cells_[c].data(), static_cast<std::size_t>(dim_ + 1)}; }
    int cell_type(int c) const { return cell_types_[c]; }
    /// The edge bisected when this cell is refined.
    std::pair<int, int> refinement_edge(int c) const { return {cells_[c][0], cells_[c][dim_]}; }

    const std::vector<BoundaryFacet>& boundary_facets() const { return boundary_; }

    double cell_volume(int c) const;
    double cell_diameter(int c) const;
    double max_diameter() const;
    Vec3 cell_centroid(int c) const;
    AffineMap cell_map(int c) const;

private:
    int dim_;
    std::vector<Vec3> vertices_;
    std::vector<std::array<int, 4>> cells_;
    std::vector<int> cell_types_;
    std::vector<BoundaryFacet> boundary_;

    void validate() const;
};

/// One facet with adjacency. For interior facets the normal points from
/// cell_plus (the lower cell id) into cell_minus; on the boundary it points
/// outward and cell_minus is -1.
struct Facet {
    std::array<int, 3> verts{-1, -1, -1};
    int cell_plus = -1;
    int cell_minus = -1;
    double measure = 0.0;
    double diameter = 0.0;
    Vec3 normal;
};

/// Complete facet enumeration of a mesh. Every facet of every cell shows up
/// exactly once, either as interior or as boundary; the four tag lists index
/// into `boundary`.
struct FacetSets {
    std::vector<Facet> interior;
    std::vector<Facet> boundary;
    std::vector<PhiTag> boundary_phi_tag;
    std::vector<UTag> boundary_u_tag;
    std::vector<int> dirichlet_phi;
    std::vector<int> neumann_phi;
    std::vector<int> dirichlet_u;
    std::vector<int> robin_u;
};

/// Structured simplicial mesh of the unit box (0,1)^dim with n subdivisions
/// per axis: 2 triangles per square or 6 tetrahedra per cube, with a
/// bisection-compatible refinement-edge assignment.
Mesh unit_box_mesh(int dim, int n, const BoundaryTagger& tagger);

/// Builds a mesh from raw cells: canonicalizes nothing, derives the boundary
/// facets from single-adjacency and tags them with `tagger`. Cell types
/// default to 0 when `types` is empty.
Mesh mesh_from_cells(int dim, std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells,
                     std::vector<int> types, const BoundaryTagger& tagger);

/// Bisects every marked cell once (newest-vertex in 2D, Maubach-style in 3D)
/// and closes for conformity. Boundary tags are inherited by child facets.
Mesh refine(const Mesh& mesh, const std::vector<int>& marked);

/// max_T h_T / d_T with h_T the cell diameter and d_T the diameter of the
/// inscribed ball.
double shape_regularity(const Mesh& mesh);

FacetSets facet_sets(const Mesh& mesh);

/// Centroid of a facet given by its vertex ids.
Vec3 facet_centroid(const Mesh& mesh, std::span<const int> verts);

} // namespace joule
