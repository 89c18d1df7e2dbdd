#include "joule/mesh_io.hpp"

#include "joule/errors.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace joule {

void write_vtk(const Mesh& mesh,
               const std::vector<std::pair<std::string, std::vector<double>>>& point_fields,
               std::ostream& os) {
    const int dim = mesh.dim();
    os << "# vtk DataFile Version 3.0\n";
    os << "joule solution\n";
    os << "ASCII\n";
    os << "DATASET UNSTRUCTURED_GRID\n";
    os.precision(17);
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const Vec3& p = mesh.vertex(v);
        os << p.x << ' ' << p.y << ' ' << p.z << '\n';
    }
    os << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (dim + 2) << '\n';
    for (int c = 0; c < mesh.num_cells(); ++c) {
        os << dim + 1;
        for (int i = 0; i <= dim; ++i) os << ' ' << mesh.cell(c)[i];
        os << '\n';
    }
    os << "CELL_TYPES " << mesh.num_cells() << '\n';
    const int vtk_type = dim == 2 ? 5 : 10;
    for (int c = 0; c < mesh.num_cells(); ++c) os << vtk_type << '\n';
    if (!point_fields.empty()) {
        os << "POINT_DATA " << mesh.num_vertices() << '\n';
        for (const auto& [name, values] : point_fields) {
            os << "SCALARS " << name << " double 1\n";
            os << "LOOKUP_TABLE default\n";
            for (int v = 0; v < mesh.num_vertices(); ++v) os << values[v] << '\n';
        }
    }
}

std::vector<double> vertex_values(const FeFunction& fun) {
    const int nv = fun.space->mesh().num_vertices();
    return std::vector<double>(fun.coeffs.begin(), fun.coeffs.begin() + nv);
}

namespace {

/// Puts the longest edge at (v[0], v[dim]) so bisection has a sensible
/// default on imported meshes.
std::array<int, 4> longest_edge_order(const std::vector<Vec3>& verts,
                                      const std::array<int, 4>& cell, int dim) {
    int best_i = 0, best_j = dim;
    double best = -1.0;
    for (int i = 0; i <= dim; ++i)
        for (int j = i + 1; j <= dim; ++j) {
            double len = norm(verts[cell[i]] - verts[cell[j]]);
            if (len > best) {
                best = len;
                best_i = i;
                best_j = j;
            }
        }
    std::array<int, 4> out{-1, -1, -1, -1};
    out[0] = cell[best_i];
    out[dim] = cell[best_j];
    int k = 1;
    for (int i = 0; i <= dim; ++i)
        if (i != best_i && i != best_j) out[k++] = cell[i];
    return out;
}

} // namespace

Mesh read_gmsh(std::istream& is, int dim,
               const std::function<std::pair<PhiTag, UTag>(int physical)>& tag_of_physical) {
    std::string line;
    std::map<long, int> node_ids;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> cells;
    struct RawBoundary {
        std::array<int, 3> verts;
        int physical;
    };
    std::vector<RawBoundary> raw_boundary;

    bool seen_format = false;
    while (std::getline(is, line)) {
        if (line.rfind("$MeshFormat", 0) == 0) {
            if (!std::getline(is, line)) throw MeshError("gmsh: truncated $MeshFormat");
            std::istringstream ss(line);
            double version = 0.0;
            ss >> version;
            if (!(version >= 2.0 && version < 3.0))
                throw MeshError("gmsh: only MSH ASCII v2.x is supported");
            seen_format = true;
        } else if (line.rfind("$Nodes", 0) == 0) {
            long n = 0;
            is >> n;
            for (long i = 0; i < n; ++i) {
                long id;
                double x, y, z;
                is >> id >> x >> y >> z;
                node_ids[id] = static_cast<int>(vertices.size());
                vertices.push_back({x, y, z});
            }
        } else if (line.rfind("$Elements", 0) == 0) {
            long n = 0;
            is >> n;
            for (long i = 0; i < n; ++i) {
                long id;
                int type, ntags;
                is >> id >> type >> ntags;
                int physical = 0;
                for (int t = 0; t < ntags; ++t) {
                    int tag;
                    is >> tag;
                    if (t == 0) physical = tag;
                }
                const int nodes_of_type = type == 1 ? 2 : (type == 2 ? 3 : (type == 4 ? 4 : -1));
                if (nodes_of_type < 0) throw MeshError("gmsh: unsupported element type " + std::to_string(type));
                std::array<long, 4> raw{};
                for (int k = 0; k < nodes_of_type; ++k) is >> raw[k];
                auto local = [&](int k) {
                    auto it = node_ids.find(raw[k]);
                    if (it == node_ids.end()) throw MeshError("gmsh: element references unknown node");
                    return it->second;
                };
                const int volume_type = dim == 2 ? 2 : 4;
                const int boundary_type = dim == 2 ? 1 : 2;
                if (type == volume_type) {
                    std::array<int, 4> cell{-1, -1, -1, -1};
                    for (int k = 0; k < nodes_of_type; ++k) cell[k] = local(k);
                    cells.push_back(cell);
                } else if (type == boundary_type) {
                    RawBoundary b{{-1, -1, -1}, 0};
                    for (int k = 0; k < nodes_of_type; ++k) b.verts[k] = local(k);
                    std::sort(b.verts.begin(), b.verts.begin() + nodes_of_type);
                    b.physical = physical;
                    raw_boundary.push_back(b);
                }
                // other element kinds (points, lower-dim in 3D) are skipped
            }
        }
    }
    if (!seen_format) throw MeshError("gmsh: missing $MeshFormat section");
    if (cells.empty()) throw MeshError("gmsh: no volume elements of the requested dimension");

    for (auto& cell : cells) cell = longest_edge_order(vertices, cell, dim);

    std::vector<BoundaryFacet> boundary;
    for (const auto& rb : raw_boundary) {
        auto [pt, ut] = tag_of_physical(rb.physical);
        boundary.push_back({rb.verts, pt, ut});
    }
    std::vector<int> types(cells.size(), 0);
    return Mesh(dim, std::move(vertices), std::move(cells), std::move(types), std::move(boundary));
}

} // namespace joule
