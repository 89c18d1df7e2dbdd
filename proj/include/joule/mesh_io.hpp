#pragma once

#include "joule/mesh.hpp"
#include "joule/space.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace joule {

/// Legacy ASCII VTK unstructured grid with per-vertex scalar fields.
void write_vtk(const Mesh& mesh,
               const std::vector<std::pair<std::string, std::vector<double>>>& point_fields,
               std::ostream& os);

/// Values of an FE function at mesh vertices (edge dofs of P2 are not
/// exported).
std::vector<double> vertex_values(const FeFunction& fun);

/// Gmsh MSH ASCII v2.2 reader. Volume elements of type 2 (triangle) or 4
/// (tetrahedron) become cells; boundary elements (type 1 in 2D, type 2 in 3D)
/// get their tag pair from the physical-group map. Cells are reordered so the
/// longest edge becomes the refinement edge.
Mesh read_gmsh(std::istream& is, int dim,
               const std::function<std::pair<PhiTag, UTag>(int physical)>& tag_of_physical);

} // namespace joule
