#include "joule/mesh.hpp"

#include "joule/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

namespace joule {

namespace {

std::array<int, 3> sorted_facet(std::span<const int> verts) {
    std::array<int, 3> key{-1, -1, -1};
    for (std::size_t i = 0; i < verts.size(); ++i) key[i] = verts[i];
    std::sort(key.begin(), key.begin() + verts.size());
    return key;
}

/// Facet i of a cell is the sub-simplex obtained by dropping vertex i.
std::vector<int> cell_facet(std::span<const int> cell, int drop) {
    std::vector<int> f;
    f.reserve(cell.size() - 1);
    for (std::size_t i = 0; i < cell.size(); ++i)
        if (static_cast<int>(i) != drop) f.push_back(cell[i]);
    return f;
}

double det2(const double m[3][3]) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

double det3(const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

} // namespace

Mesh::Mesh(int dim, std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells,
           std::vector<int> cell_types, std::vector<BoundaryFacet> boundary_facets)
    : dim_(dim),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      cell_types_(std::move(cell_types)),
      boundary_(std::move(boundary_facets)) {
    validate();
}

AffineMap Mesh::cell_map(int c) const {
    AffineMap map;
    map.dim = dim_;
    const auto& cell = cells_[c];
    map.origin = vertices_[cell[0]];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) map.jac[i][j] = (i == j) ? 1.0 : 0.0;
    for (int j = 0; j < dim_; ++j) {
        Vec3 e = vertices_[cell[j + 1]] - map.origin;
        for (int i = 0; i < dim_; ++i) map.jac[i][j] = e[i];
    }
    map.det = (dim_ == 2) ? det2(map.jac) : det3(map.jac);
    // inverse of the dim x dim block
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) map.inv[i][j] = (i == j) ? 1.0 : 0.0;
    if (dim_ == 2) {
        const double d = map.det;
        map.inv[0][0] = map.jac[1][1] / d;
        map.inv[0][1] = -map.jac[0][1] / d;
        map.inv[1][0] = -map.jac[1][0] / d;
        map.inv[1][1] = map.jac[0][0] / d;
    } else {
        const double d = map.det;
        const auto& m = map.jac;
        map.inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
        map.inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
        map.inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
        map.inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
        map.inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
        map.inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
        map.inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
        map.inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
        map.inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
    }
    return map;
}

double Mesh::cell_volume(int c) const {
    const auto& cell = cells_[c];
    Vec3 e1 = vertices_[cell[1]] - vertices_[cell[0]];
    Vec3 e2 = vertices_[cell[2]] - vertices_[cell[0]];
    if (dim_ == 2) return 0.5 * std::abs(e1.x * e2.y - e1.y * e2.x);
    Vec3 e3 = vertices_[cell[3]] - vertices_[cell[0]];
    return std::abs(dot(e1, cross(e2, e3))) / 6.0;
}

double Mesh::cell_diameter(int c) const {
    double h = 0.0;
    for (int i = 0; i <= dim_; ++i)
        for (int j = i + 1; j <= dim_; ++j)
            h = std::max(h, norm(vertices_[cells_[c][i]] - vertices_[cells_[c][j]]));
    return h;
}

double Mesh::max_diameter() const {
    double h = 0.0;
    for (int c = 0; c < num_cells(); ++c) h = std::max(h, cell_diameter(c));
    return h;
}

Vec3 Mesh::cell_centroid(int c) const {
    Vec3 p;
    for (int i = 0; i <= dim_; ++i) p += vertices_[cells_[c][i]];
    return (1.0 / (dim_ + 1)) * p;
}

Vec3 facet_centroid(const Mesh& mesh, std::span<const int> verts) {
    Vec3 p;
    for (int v : verts) p += mesh.vertex(v);
    return (1.0 / static_cast<double>(verts.size())) * p;
}

void Mesh::validate() const {
    if (dim_ != 2 && dim_ != 3) throw ArgumentError("mesh dimension must be 2 or 3");
    if (cell_types_.size() != cells_.size())
        throw ArgumentError("cell type count does not match cell count");
    const int nv = num_vertices();
    for (int c = 0; c < num_cells(); ++c) {
        for (int i = 0; i <= dim_; ++i) {
            int v = cells_[c][i];
            if (v < 0 || v >= nv) throw MeshError("cell vertex id out of range");
        }
        if (cell_types_[c] < 0 || cell_types_[c] >= dim_)
            throw MeshError("cell type out of range");
        double scale = std::pow(cell_diameter(c), dim_);
        if (!(cell_volume(c) > 1e-14 * scale))
            throw MeshError("degenerate cell " + std::to_string(c));
    }

    // Every single-adjacency facet must be tagged exactly once; no facet may
    // be shared by more than two cells.
    std::map<std::array<int, 3>, int> count;
    for (int c = 0; c < num_cells(); ++c)
        for (int i = 0; i <= dim_; ++i) {
            auto f = cell_facet(cell(c), i);
            ++count[sorted_facet(f)];
        }
    std::set<std::array<int, 3>> tagged;
    bool has_dirichlet_phi = false;
    for (const auto& bf : boundary_) {
        std::array<int, 3> key = bf.verts;
        auto it = count.find(key);
        if (it == count.end() || it->second != 1)
            throw MeshError("tagged boundary facet is not a boundary facet of any cell");
        if (!tagged.insert(key).second) throw MeshError("boundary facet tagged twice");
        if (bf.phi_tag == PhiTag::dirichlet) has_dirichlet_phi = true;
    }
    for (const auto& [key, n] : count) {
        if (n > 2) throw MeshError("facet shared by more than two cells");
        if (n == 1 && !tagged.count(key)) throw MeshError("untagged boundary facet");
    }
    if (!has_dirichlet_phi)
        throw MeshError("mesh has no Dirichlet facet for the potential");
}

Mesh mesh_from_cells(int dim, std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells,
                     std::vector<int> types, const BoundaryTagger& tagger) {
    if (types.empty()) types.assign(cells.size(), 0);
    std::map<std::array<int, 3>, int> count;
    for (const auto& cell : cells)
        for (int i = 0; i <= dim; ++i) {
            auto f = cell_facet({cell.data(), static_cast<std::size_t>(dim + 1)}, i);
            ++count[sorted_facet(f)];
        }
    std::vector<BoundaryFacet> boundary;
    for (const auto& [key, n] : count) {
        if (n != 1) continue;
        Vec3 c;
        for (int i = 0; i < dim; ++i) c += vertices[key[i]];
        c = (1.0 / dim) * c;
        auto [pt, ut] = tagger(c);
        boundary.push_back({key, pt, ut});
    }
    return Mesh(dim, std::move(vertices), std::move(cells), std::move(types), std::move(boundary));
}

Mesh unit_box_mesh(int dim, int n, const BoundaryTagger& tagger) {
    if (dim != 2 && dim != 3) throw ArgumentError("unit_box_mesh: dim must be 2 or 3");
    if (n < 1) throw ArgumentError("unit_box_mesh: n must be >= 1");
    const double h = 1.0 / n;

    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> cells;
    if (dim == 2) {
        auto vid = [n](int i, int j) { return i + j * (n + 1); };
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) vertices.push_back({i * h, j * h, 0.0});
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
                // both triangles refine first at the square diagonal a-c
                cells.push_back({a, b, c, -1});
                cells.push_back({a, d, c, -1});
            }
    } else {
        auto vid = [n](int i, int j, int k) { return i + (n + 1) * (j + (n + 1) * k); };
        for (int k = 0; k <= n; ++k)
            for (int j = 0; j <= n; ++j)
                for (int i = 0; i <= n; ++i) vertices.push_back({i * h, j * h, k * h});
        // Kuhn decomposition: one tetrahedron per permutation, every path runs
        // from the low corner to the high corner, so all six share the cube
        // diagonal as refinement edge.
        const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i)
                    for (const auto& p : perms) {
                        int d0[3] = {i, j, k};
                        std::array<int, 4> tet{};
                        tet[0] = vid(d0[0], d0[1], d0[2]);
                        int step[3] = {d0[0], d0[1], d0[2]};
                        for (int s = 0; s < 3; ++s) {
                            ++step[p[s]];
                            tet[s + 1] = vid(step[0], step[1], step[2]);
                        }
                        cells.push_back(tet);
                    }
    }
    return mesh_from_cells(dim, std::move(vertices), std::move(cells), {}, tagger);
}

// ---------------------------------------------------------------------------
// Bisection refinement
// ---------------------------------------------------------------------------

namespace {

/// Mutable scratch mesh used during one refine() call. Cells are append-only;
/// a bisected cell is marked dead and replaced by its two children.
struct WorkMesh {
    int dim;
    std::vector<Vec3> verts;
    std::vector<std::array<int, 4>> cells;
    std::vector<int> types;
    std::vector<char> alive;
    std::vector<std::vector<int>> vertex_cells; // may hold stale ids, filtered on read
    std::map<std::array<int, 2>, int> midpoint;
    std::map<std::array<int, 3>, std::pair<PhiTag, UTag>> boundary;
    long ops = 0;
    long budget = 0;

    std::pair<int, int> ref_edge(int c) const { return {cells[c][0], cells[c][dim]}; }

    bool cell_has_vertex(int c, int v) const {
        for (int i = 0; i <= dim; ++i)
            if (cells[c][i] == v) return true;
        return false;
    }

    std::vector<int> cells_with_edge(int a, int b) {
        std::vector<int> out;
        for (int c : vertex_cells[a])
            if (alive[c] && cell_has_vertex(c, a) && cell_has_vertex(c, b)) out.push_back(c);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    void charge() {
        if (++ops > budget)
            throw MeshError("refinement closure did not terminate; "
                            "refinement-edge assignment is not bisection-compatible");
    }

    /// Creates (or fetches) the midpoint of edge (a,b); on creation splits
    /// every boundary facet containing that edge so children inherit tags.
    int split_edge(int a, int b) {
        std::array<int, 2> key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        int z = static_cast<int>(verts.size());
        verts.push_back(0.5 * (verts[a] + verts[b]));
        vertex_cells.emplace_back();
        midpoint.emplace(key, z);

        std::vector<std::array<int, 3>> hit;
        for (const auto& [fk, tags] : boundary) {
            (void)tags;
            bool has_a = false, has_b = false;
            for (int i = 0; i < dim; ++i) {
                has_a |= fk[i] == a;
                has_b |= fk[i] == b;
            }
            if (has_a && has_b) hit.push_back(fk);
        }
        for (const auto& fk : hit) {
            auto tags = boundary.at(fk);
            boundary.erase(fk);
            if (dim == 2) {
                boundary.emplace(sorted_facet(std::array<int, 2>{a, z}), tags);
                boundary.emplace(sorted_facet(std::array<int, 2>{b, z}), tags);
            } else {
                int w = -1;
                for (int i = 0; i < 3; ++i)
                    if (fk[i] != a && fk[i] != b) w = fk[i];
                boundary.emplace(sorted_facet(std::array<int, 3>{a, z, w}), tags);
                boundary.emplace(sorted_facet(std::array<int, 3>{b, z, w}), tags);
            }
        }
        return z;
    }

    /// Replaces cell c (whose refinement edge midpoint is z) by its two
    /// children in Maubach/Traxler order.
    void bisect(int c, int z) {
        const auto& v = cells[c];
        const int t = types[c];
        std::array<int, 4> c1{-1, -1, -1, -1}, c2{-1, -1, -1, -1};
        if (dim == 2) {
            c1 = {v[0], z, v[1], -1};
            c2 = {v[2], z, v[1], -1};
        } else {
            c1 = {v[0], z, v[1], v[2]};
            if (t == 0)
                c2 = {v[3], z, v[2], v[1]};
            else
                c2 = {v[3], z, v[1], v[2]};
        }
        alive[c] = 0;
        int child_type = (t + 1) % dim;
        for (const auto& child : {c1, c2}) {
            int id = static_cast<int>(cells.size());
            cells.push_back(child);
            types.push_back(child_type);
            alive.push_back(1);
            for (int i = 0; i <= dim; ++i) vertex_cells[child[i]].push_back(id);
        }
    }

    /// Bisects cell c at its refinement edge, recursively bisecting
    /// incompatible neighbours first (Kossaczky recursion). A cell is only
    /// ever bisected at its own refinement edge, so if c has died it has
    /// already been refined.
    void refine_cell(int c) {
        if (!alive[c]) return;
        for (;;) {
            charge();
            if (!alive[c]) return;
            auto [a, b] = ref_edge(c);
            auto patch = cells_with_edge(a, b);
            bool compatible = true;
            for (int j : patch) {
                auto [ja, jb] = ref_edge(j);
                if (std::minmax(ja, jb) != std::minmax(a, b)) {
                    compatible = false;
                    refine_cell(j);
                }
            }
            if (!compatible) continue;
            int z = split_edge(a, b);
            for (int j : patch) bisect(j, z);
            return;
        }
    }
};

} // namespace

Mesh refine(const Mesh& mesh, const std::vector<int>& marked) {
    for (int c : marked)
        if (c < 0 || c >= mesh.num_cells()) throw ArgumentError("refine: marked cell id out of range");

    WorkMesh wm;
    wm.dim = mesh.dim();
    wm.verts = mesh.vertices();
    wm.cells.reserve(mesh.num_cells() * 2);
    wm.vertex_cells.resize(wm.verts.size());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        std::array<int, 4> cv{-1, -1, -1, -1};
        for (int i = 0; i <= wm.dim; ++i) cv[i] = mesh.cell(c)[i];
        wm.cells.push_back(cv);
        wm.types.push_back(mesh.cell_type(c));
        wm.alive.push_back(1);
        for (int i = 0; i <= wm.dim; ++i) wm.vertex_cells[cv[i]].push_back(c);
    }
    for (const auto& bf : mesh.boundary_facets())
        wm.boundary.emplace(bf.verts, std::make_pair(bf.phi_tag, bf.u_tag));
    wm.budget = 10000 + 500L * (mesh.num_cells() + static_cast<long>(marked.size()));

    for (int c : marked) wm.refine_cell(c);

    // compact live cells in creation order
    std::vector<std::array<int, 4>> cells;
    std::vector<int> types;
    for (std::size_t c = 0; c < wm.cells.size(); ++c)
        if (wm.alive[c]) {
            cells.push_back(wm.cells[c]);
            types.push_back(wm.types[c]);
        }
    std::vector<BoundaryFacet> boundary;
    for (const auto& [key, tags] : wm.boundary) boundary.push_back({key, tags.first, tags.second});
    return Mesh(wm.dim, std::move(wm.verts), std::move(cells), std::move(types), std::move(boundary));
}

double shape_regularity(const Mesh& mesh) {
    double gamma = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double vol = mesh.cell_volume(c);
        const double h = mesh.cell_diameter(c);
        if (!(vol > 1e-300)) throw MeshError("shape_regularity: degenerate cell");
        double inscribed;
        if (mesh.dim() == 2) {
            double per = 0.0;
            auto cell = mesh.cell(c);
            for (int i = 0; i < 3; ++i)
                per += norm(mesh.vertex(cell[i]) - mesh.vertex(cell[(i + 1) % 3]));
            inscribed = 4.0 * vol / per; // d = 2r, r = 2A/P
        } else {
            auto cell = mesh.cell(c);
            double area = 0.0;
            for (int i = 0; i < 4; ++i) {
                std::vector<int> f = cell_facet(cell, i);
                Vec3 e1 = mesh.vertex(f[1]) - mesh.vertex(f[0]);
                Vec3 e2 = mesh.vertex(f[2]) - mesh.vertex(f[0]);
                area += 0.5 * norm(cross(e1, e2));
            }
            inscribed = 6.0 * vol / area; // d = 2r, r = 3V/S
        }
        gamma = std::max(gamma, h / inscribed);
    }
    return gamma;
}

FacetSets facet_sets(const Mesh& mesh) {
    const int dim = mesh.dim();
    std::map<std::array<int, 3>, std::vector<int>> adjacency;
    for (int c = 0; c < mesh.num_cells(); ++c)
        for (int i = 0; i <= dim; ++i) {
            auto f = cell_facet(mesh.cell(c), i);
            adjacency[sorted_facet(f)].push_back(c);
        }

    std::map<std::array<int, 3>, std::pair<PhiTag, UTag>> tags;
    for (const auto& bf : mesh.boundary_facets()) tags.emplace(bf.verts, std::make_pair(bf.phi_tag, bf.u_tag));

    auto make_facet = [&](const std::array<int, 3>& key, const std::vector<int>& cells) {
        Facet f;
        f.verts = key;
        f.cell_plus = *std::min_element(cells.begin(), cells.end());
        f.cell_minus = cells.size() == 2 ? *std::max_element(cells.begin(), cells.end()) : -1;
        Vec3 p0 = mesh.vertex(key[0]);
        Vec3 p1 = mesh.vertex(key[1]);
        if (dim == 2) {
            Vec3 t = p1 - p0;
            f.measure = norm(t);
            f.diameter = f.measure;
            f.normal = {t.y / f.measure, -t.x / f.measure, 0.0};
        } else {
            Vec3 p2 = mesh.vertex(key[2]);
            Vec3 n = cross(p1 - p0, p2 - p0);
            double len = norm(n);
            f.measure = 0.5 * len;
            f.diameter = std::max({norm(p1 - p0), norm(p2 - p0), norm(p2 - p1)});
            f.normal = (1.0 / len) * n;
        }
        // orient away from the plus cell
        Vec3 c;
        for (int i = 0; i < dim; ++i) c += mesh.vertex(key[i]);
        c = (1.0 / dim) * c;
        if (dot(f.normal, c - mesh.cell_centroid(f.cell_plus)) < 0.0) f.normal = -1.0 * f.normal;
        return f;
    };

    FacetSets sets;
    for (const auto& [key, cells] : adjacency) {
        if (cells.size() > 2) throw MeshError("facet shared by more than two cells");
        if (cells.size() == 2) {
            sets.interior.push_back(make_facet(key, cells));
        } else {
            auto it = tags.find(key);
            if (it == tags.end()) throw MeshError("untagged boundary facet");
            int idx = static_cast<int>(sets.boundary.size());
            sets.boundary.push_back(make_facet(key, cells));
            sets.boundary_phi_tag.push_back(it->second.first);
            sets.boundary_u_tag.push_back(it->second.second);
            (it->second.first == PhiTag::dirichlet ? sets.dirichlet_phi : sets.neumann_phi).push_back(idx);
            (it->second.second == UTag::dirichlet ? sets.dirichlet_u : sets.robin_u).push_back(idx);
        }
    }
    return sets;
}

} // namespace joule
