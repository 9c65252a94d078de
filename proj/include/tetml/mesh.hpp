#ifndef TETML_MESH_HPP
#define TETML_MESH_HPP

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tetml/errors.hpp"
#include "tetml/geometry.hpp"

namespace tetml {

struct Vertex {
    int id = -1;
    Vec3 coords;
    int birth_level = 0;
    bool on_boundary = false;
    std::array<int, 2> parent_edge{-1, -1};  // endpoints of the bisected edge, -1 for roots
};

enum class TetKind { Root, RedChild, GreenChild };

// Implemented irregular configurations; anything else is promoted to red.
enum class GreenType { None, E1, E2F, E2O, E3F, Promote, Red };

struct Tet {
    int id = -1;
    std::array<int, 4> verts{};          // sorted by vertex id, orientation-corrected
    int level = 0;                       // L(tau), level of birth
    TetKind kind = TetKind::Root;
    GreenType green_subtype = GreenType::None;
    int parent = -1;
    std::vector<int> children;
};

enum class Adjacency { Face, Edge, Vertex, Disjoint };

using EdgeKey = std::pair<int, int>;
inline EdgeKey edge_key(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

struct MeshLevel {
    int level = 0;
    std::vector<int> active_tets;
    std::vector<int> interior_nodes;                // ascending vertex id; coarse nodes first
    std::unordered_map<int, int> interior_index;    // vertex id -> position in interior_nodes
    std::set<int> region_tets;                      // tets covering Omega_j (union of new-node stars)
    std::unordered_map<int, std::vector<int>> vertex_star; // vertex id -> active tets containing it

    int dof() const { return static_cast<int>(interior_nodes.size()); }
};

struct Hierarchy {
    std::vector<Vertex> vertices;
    std::vector<Tet> tets;
    std::vector<MeshLevel> levels;
    std::map<EdgeKey, int> edge_midpoint_index;  // unordered parent edge -> midpoint vertex id
    double domain_volume = 0;

    int max_level() const { return static_cast<int>(levels.size()) - 1; }

    const MeshLevel& level(int j) const {
        if (j < 0 || j >= static_cast<int>(levels.size()))
            throw LevelMissing("level " + std::to_string(j) + " does not exist");
        return levels[static_cast<size_t>(j)];
    }
    MeshLevel& level(int j) {
        return const_cast<MeshLevel&>(static_cast<const Hierarchy*>(this)->level(j));
    }

    std::array<Vec3, 4> tet_coords(int t) const {
        const Tet& tet = tets[static_cast<size_t>(t)];
        return {vertices[static_cast<size_t>(tet.verts[0])].coords,
                vertices[static_cast<size_t>(tet.verts[1])].coords,
                vertices[static_cast<size_t>(tet.verts[2])].coords,
                vertices[static_cast<size_t>(tet.verts[3])].coords};
    }
    double tet_vol(int t) const { return tet_volume(tet_coords(t)); }

    // Midpoint vertex of edge (a,b); created on first request, reused afterwards.
    int get_or_create_midpoint(int a, int b, int birth_level) {
        auto key = edge_key(a, b);
        auto it = edge_midpoint_index.find(key);
        if (it != edge_midpoint_index.end()) return it->second;
        Vertex v;
        v.id = static_cast<int>(vertices.size());
        v.coords = midpoint(vertices[static_cast<size_t>(a)].coords,
                            vertices[static_cast<size_t>(b)].coords);
        v.birth_level = birth_level;
        v.on_boundary = false;  // fixed up by finalize_level
        v.parent_edge = {key.first, key.second};
        vertices.push_back(v);
        edge_midpoint_index.emplace(key, v.id);
        return v.id;
    }
};

namespace detail {

// Canonical orientation: vertices sorted by id, swap last two if signed volume negative.
inline std::array<int, 4> canonical_verts(const Hierarchy& h, std::array<int, 4> v) {
    std::sort(v.begin(), v.end());
    std::array<Vec3, 4> c = {h.vertices[(size_t)v[0]].coords, h.vertices[(size_t)v[1]].coords,
                             h.vertices[(size_t)v[2]].coords, h.vertices[(size_t)v[3]].coords};
    double vol = tet_volume(c);
    if (vol < 0) std::swap(v[2], v[3]);
    return v;
}

inline std::array<int, 3> face_key(int a, int b, int c) {
    std::array<int, 3> f = {a, b, c};
    std::sort(f.begin(), f.end());
    return f;
}

inline std::array<std::array<int, 3>, 4> tet_faces(const std::array<int, 4>& v) {
    return {face_key(v[1], v[2], v[3]), face_key(v[0], v[2], v[3]),
            face_key(v[0], v[1], v[3]), face_key(v[0], v[1], v[2])};
}

} // namespace detail

// Appends a tet with canonical orientation; throws DegenerateTet on zero volume.
inline int add_tet(Hierarchy& h, std::array<int, 4> verts, int level, TetKind kind,
                   GreenType subtype = GreenType::None, int parent = -1) {
    Tet t;
    t.verts = detail::canonical_verts(h, verts);
    std::array<Vec3, 4> c = {h.vertices[(size_t)t.verts[0]].coords,
                             h.vertices[(size_t)t.verts[1]].coords,
                             h.vertices[(size_t)t.verts[2]].coords,
                             h.vertices[(size_t)t.verts[3]].coords};
    if (tet_volume(c) <= 0)
        throw DegenerateTet("tet with nonpositive volume");
    t.id = static_cast<int>(h.tets.size());
    t.level = level;
    t.kind = kind;
    t.green_subtype = subtype;
    t.parent = parent;
    h.tets.push_back(t);
    if (parent >= 0) h.tets[(size_t)parent].children.push_back(t.id);
    return t.id;
}

// Rebuilds per-level lookup structures and boundary flags from active_tets.
// A face belonging to exactly one active tet is a boundary face; its three
// vertices are boundary vertices. Boundary status is geometric, so flags from
// earlier levels are only ever confirmed, never flipped back.
inline void finalize_level(Hierarchy& h, int j) {
    MeshLevel& lv = h.level(j);
    lv.vertex_star.clear();
    std::map<std::array<int, 3>, int> face_count;
    for (int t : lv.active_tets) {
        const Tet& tet = h.tets[(size_t)t];
        for (int vid : tet.verts) lv.vertex_star[vid].push_back(t);
        for (auto& f : detail::tet_faces(tet.verts)) face_count[f]++;
    }
    for (auto& [f, cnt] : face_count) {
        if (cnt > 2)
            throw NonConformingInput("face shared by more than two tets at level " +
                                     std::to_string(j));
        if (cnt == 1)
            for (int vid : f) h.vertices[(size_t)vid].on_boundary = true;
    }
    lv.interior_nodes.clear();
    lv.interior_index.clear();
    for (auto& [vid, star] : lv.vertex_star)
        if (!h.vertices[(size_t)vid].on_boundary) lv.interior_nodes.push_back(vid);
    std::sort(lv.interior_nodes.begin(), lv.interior_nodes.end());
    for (size_t i = 0; i < lv.interior_nodes.size(); ++i)
        lv.interior_index[lv.interior_nodes[i]] = static_cast<int>(i);
}

// Cheap default conformity check: no face shared by more than two tets.
inline bool conforming(const Hierarchy& h, int j, std::string* witness = nullptr) {
    const MeshLevel& lv = h.level(j);
    std::map<std::array<int, 3>, int> face_count;
    for (int t : lv.active_tets)
        for (auto& f : detail::tet_faces(h.tets[(size_t)t].verts)) face_count[f]++;
    for (auto& [f, cnt] : face_count)
        if (cnt > 2) {
            if (witness) *witness = "overshared face";
            return false;
        }
    return true;
}

// Exhaustive oracle: face counts, hanging-vertex scan (a vertex lying in the
// closure of an active tet must be one of its corners), and pairwise interior
// disjointness via centroids. Vertices are binned on a uniform grid so the
// scan stays near-linear at desk scale.
inline bool conforming_exhaustive(const Hierarchy& h, int j, std::string* witness = nullptr) {
    if (!conforming(h, j, witness)) return false;
    const MeshLevel& lv = h.level(j);

    std::vector<int> level_verts;
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (auto& [vid, s] : lv.vertex_star) {
        level_verts.push_back(vid);
        const Vec3& c = h.vertices[(size_t)vid].coords;
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], c[k]);
            hi[k] = std::max(hi[k], c[k]);
        }
    }
    int nb = std::max(1, (int)std::cbrt((double)level_verts.size() / 4.0));
    auto bin_of = [&](const Vec3& c, int k) {
        double w = hi[k] - lo[k];
        if (w <= 0) return 0;
        int b = (int)((c[k] - lo[k]) / w * nb);
        return std::min(std::max(b, 0), nb - 1);
    };
    std::unordered_map<int64_t, std::vector<int>> bins;
    for (int vid : level_verts) {
        const Vec3& c = h.vertices[(size_t)vid].coords;
        int64_t key = (int64_t)bin_of(c, 0) + nb * ((int64_t)bin_of(c, 1) + nb * bin_of(c, 2));
        bins[key].push_back(vid);
    }

    for (int t : lv.active_tets) {
        const Tet& tet = h.tets[(size_t)t];
        auto coords = h.tet_coords(t);
        Vec3 blo{1e300, 1e300, 1e300}, bhi{-1e300, -1e300, -1e300};
        for (auto& c : coords)
            for (int k = 0; k < 3; ++k) {
                blo[k] = std::min(blo[k], c[k]);
                bhi[k] = std::max(bhi[k], c[k]);
            }
        int b0[3], b1[3];
        for (int k = 0; k < 3; ++k) {
            b0[k] = bin_of(blo, k);
            b1[k] = bin_of(bhi, k);
        }
        for (int bx = b0[0]; bx <= b1[0]; ++bx)
            for (int by = b0[1]; by <= b1[1]; ++by)
                for (int bz = b0[2]; bz <= b1[2]; ++bz) {
                    int64_t key = (int64_t)bx + nb * ((int64_t)by + nb * bz);
                    auto it = bins.find(key);
                    if (it == bins.end()) continue;
                    for (int vid : it->second) {
                        if (vid == tet.verts[0] || vid == tet.verts[1] ||
                            vid == tet.verts[2] || vid == tet.verts[3])
                            continue;
                        if (point_in_tet(coords, h.vertices[(size_t)vid].coords, 1e-10)) {
                            if (witness)
                                *witness = "hanging vertex " + std::to_string(vid) +
                                           " in tet " + std::to_string(t);
                            return false;
                        }
                    }
                }
    }

    // pairwise interior disjointness among face-hash neighbors plus duplicate scan
    std::map<std::array<int, 3>, std::vector<int>> face_tets;
    for (int t : lv.active_tets)
        for (auto& f : detail::tet_faces(h.tets[(size_t)t].verts)) face_tets[f].push_back(t);
    for (auto& [f, ts] : face_tets) {
        if (ts.size() != 2) continue;
        auto ca = h.tet_coords(ts[0]);
        auto cb = h.tet_coords(ts[1]);
        Vec3 cen_a = (ca[0] + ca[1] + ca[2] + ca[3]) * 0.25;
        Vec3 cen_b = (cb[0] + cb[1] + cb[2] + cb[3]) * 0.25;
        if (point_in_tet(cb, cen_a, -1e-8) || point_in_tet(ca, cen_b, -1e-8)) {
            if (witness)
                *witness = "overlapping tets " + std::to_string(ts[0]) + "," +
                           std::to_string(ts[1]);
            return false;
        }
    }
    return true;
}

inline double level_volume(const Hierarchy& h, int j) {
    double v = 0;
    for (int t : h.level(j).active_tets) v += h.tet_vol(t);
    return v;
}

// -------------------------------------------------------------------------
// Initial meshes

inline void finish_initial(Hierarchy& h) {
    MeshLevel lv;
    lv.level = 0;
    for (const Tet& t : h.tets) lv.active_tets.push_back(t.id);
    h.levels.push_back(std::move(lv));
    finalize_level(h, 0);
    std::string w;
    if (!conforming_exhaustive(h, 0, &w)) throw NonConformingInput("initial mesh: " + w);
    h.domain_volume = level_volume(h, 0);
    // Omega_0 = Omega
    h.levels[0].region_tets.insert(h.levels[0].active_tets.begin(),
                                   h.levels[0].active_tets.end());
}

// Unit cube scaled by `scale`, split into 6 tets sharing the main diagonal.
inline Hierarchy build_unit_cube(double scale = 1.0) {
    Hierarchy h;
    for (int id = 0; id < 8; ++id) {
        Vertex v;
        v.id = id;
        v.coords = {scale * (id & 1), scale * ((id >> 1) & 1), scale * ((id >> 2) & 1)};
        h.vertices.push_back(v);
    }
    const int axes[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4}, {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
    for (auto& p : axes) {
        int a = p[0], b = a + p[1];
        add_tet(h, {0, a, b, 7}, 0, TetKind::Root);
    }
    finish_initial(h);
    return h;
}

inline Hierarchy build_reference_simplex() {
    Hierarchy h;
    Vec3 pts[4] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int id = 0; id < 4; ++id) {
        Vertex v;
        v.id = id;
        v.coords = pts[id];
        h.vertices.push_back(v);
    }
    add_tet(h, {0, 1, 2, 3}, 0, TetKind::Root);
    finish_initial(h);
    return h;
}

// Explicit mesh: header "V T", then V coordinate lines, then T tet lines of
// four zero-based vertex indices.
inline Hierarchy build_from_stream(std::istream& in) {
    int nv = 0, nt = 0;
    if (!(in >> nv >> nt) || nv < 4 || nt < 1)
        throw NonConformingInput("bad explicit mesh header");
    Hierarchy h;
    for (int id = 0; id < nv; ++id) {
        Vertex v;
        v.id = id;
        if (!(in >> v.coords.x >> v.coords.y >> v.coords.z))
            throw NonConformingInput("bad vertex line");
        h.vertices.push_back(v);
    }
    for (int t = 0; t < nt; ++t) {
        std::array<int, 4> verts;
        if (!(in >> verts[0] >> verts[1] >> verts[2] >> verts[3]))
            throw NonConformingInput("bad tet line");
        for (int v : verts)
            if (v < 0 || v >= nv) throw NonConformingInput("vertex index out of range");
        add_tet(h, verts, 0, TetKind::Root);
    }
    finish_initial(h);
    return h;
}

// -------------------------------------------------------------------------
// Queries

inline bool is_active(const Hierarchy& h, int tet_id, int j) {
    const MeshLevel& lv = h.level(j);
    const Tet& t = h.tets[(size_t)tet_id];
    auto it = lv.vertex_star.find(t.verts[0]);
    if (it == lv.vertex_star.end()) return false;
    for (int a : it->second)
        if (a == tet_id) return true;
    return false;
}

inline Adjacency adjacency(const Hierarchy& h, int a, int b, int j) {
    if (a == b) throw SelfQuery("adjacency of a tet with itself");
    if (!is_active(h, a, j) || !is_active(h, b, j))
        throw NotActive("tet not active at level " + std::to_string(j));
    const Tet& ta = h.tets[(size_t)a];
    const Tet& tb = h.tets[(size_t)b];
    int shared = 0;
    for (int va : ta.verts)
        for (int vb : tb.verts)
            if (va == vb) ++shared;
    switch (shared) {
        case 3: return Adjacency::Face;
        case 2: return Adjacency::Edge;
        case 1: return Adjacency::Vertex;
        default: return Adjacency::Disjoint;
    }
}

inline const std::vector<int>& star(const Hierarchy& h, int vertex_id, int j) {
    const MeshLevel& lv = h.level(j);
    auto it = lv.vertex_star.find(vertex_id);
    if (it == lv.vertex_star.end())
        throw UnknownVertex("vertex " + std::to_string(vertex_id) + " not at level " +
                            std::to_string(j));
    return it->second;
}

} // namespace tetml

#endif
