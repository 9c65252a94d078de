#ifndef TETML_REFINE_HPP
#define TETML_REFINE_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "tetml/mesh.hpp"

namespace tetml {

// Canonical edge ordering on the (sorted) tet vertex array.
inline constexpr int kTetEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

struct EdgeMarkMap {
    int level = 0;                 // marks drive T_level -> T_{level+1}
    std::set<EdgeKey> marked;

    bool is_marked(int a, int b) const { return marked.count(edge_key(a, b)) > 0; }
};

// 6-bit pattern of a tet under the mark map, bit i = canonical edge i marked.
inline int edge_pattern(const Hierarchy& h, int tet_id, const EdgeMarkMap& marks) {
    const Tet& t = h.tets[(size_t)tet_id];
    int pat = 0;
    for (int e = 0; e < 6; ++e)
        if (marks.is_marked(t.verts[kTetEdges[e][0]], t.verts[kTetEdges[e][1]])) pat |= 1 << e;
    return pat;
}

inline GreenType classify_pattern(int pat) {
    int n = __builtin_popcount((unsigned)pat);
    switch (n) {
        case 0: return GreenType::None;
        case 1: return GreenType::E1;
        case 2: {
            // two edges of a tet either share a vertex (common face) or are opposite
            int e0 = -1, e1 = -1;
            for (int e = 0; e < 6; ++e)
                if (pat & (1 << e)) (e0 < 0 ? e0 : e1) = e;
            bool share = kTetEdges[e0][0] == kTetEdges[e1][0] ||
                         kTetEdges[e0][0] == kTetEdges[e1][1] ||
                         kTetEdges[e0][1] == kTetEdges[e1][0] ||
                         kTetEdges[e0][1] == kTetEdges[e1][1];
            return share ? GreenType::E2F : GreenType::E2O;
        }
        case 3: {
            // common face iff the three edges cover exactly three vertices
            int vmask = 0;
            for (int e = 0; e < 6; ++e)
                if (pat & (1 << e)) vmask |= (1 << kTetEdges[e][0]) | (1 << kTetEdges[e][1]);
            return __builtin_popcount((unsigned)vmask) == 3 ? GreenType::E3F
                                                            : GreenType::Promote;
        }
        case 6: return GreenType::Red;
        default: return GreenType::Promote;  // 4 or 5 marked edges
    }
}

// ---------------------------------------------------------------------------
// Red refinement (octasection)

namespace detail {

// Shortest of the three interior-octahedron diagonals; ties by smallest
// lexicographic vertex-id pair.
inline int select_diagonal(const Hierarchy& h, const int m[6]) {
    // diagonals pair opposite canonical edges: (0,5), (1,4), (2,3)
    const int diag[3][2] = {{0, 5}, {1, 4}, {2, 3}};
    int best = -1;
    double best_len = 0;
    EdgeKey best_key{};
    for (int d = 0; d < 3; ++d) {
        int a = m[diag[d][0]], b = m[diag[d][1]];
        double len = norm(h.vertices[(size_t)a].coords - h.vertices[(size_t)b].coords);
        EdgeKey key = edge_key(a, b);
        if (best < 0 || len < best_len - 1e-14 * best_len ||
            (std::abs(len - best_len) <= 1e-14 * best_len && key < best_key)) {
            best = d;
            best_len = len;
            best_key = key;
        }
    }
    return best;
}

} // namespace detail

// Subdivides tet t of level j into 8 children of level j+1: four corner tets
// congruent to t plus four from the interior octahedron cut along the
// selected diagonal.
inline std::array<int, 8> red_refine(Hierarchy& h, int tet_id, int j) {
    const Tet t = h.tets[(size_t)tet_id];
    if (t.kind == TetKind::GreenChild)
        throw GreenRefinementForbidden("red_refine on green tet " + std::to_string(tet_id));
    if (t.level != j)
        throw WrongLevel("red_refine: L(tau) != current level");
    if (!t.children.empty())
        throw WrongLevel("red_refine: tet already refined");

    int m[6];
    for (int e = 0; e < 6; ++e)
        m[e] = h.get_or_create_midpoint(t.verts[kTetEdges[e][0]], t.verts[kTetEdges[e][1]],
                                        j + 1);
    std::array<int, 8> kids;
    // corner children: vertex i with midpoints of its three incident edges
    for (int i = 0; i < 4; ++i) {
        std::array<int, 4> cv = {t.verts[i], -1, -1, -1};
        int n = 1;
        for (int e = 0; e < 6; ++e)
            if (kTetEdges[e][0] == i || kTetEdges[e][1] == i) cv[n++] = m[e];
        kids[(size_t)i] = add_tet(h, cv, j + 1, TetKind::RedChild, GreenType::None, tet_id);
    }
    // interior octahedron
    int d = detail::select_diagonal(h, m);
    const int diag[3][2] = {{0, 5}, {1, 4}, {2, 3}};
    int da = m[diag[d][0]], db = m[diag[d][1]];
    std::vector<int> ring;
    for (int e = 0; e < 6; ++e)
        if (e != diag[d][0] && e != diag[d][1]) ring.push_back(e);
    // order the four remaining midpoints into an adjacency cycle: two octahedron
    // vertices are adjacent iff their parent edges share a tet vertex
    auto edges_touch = [](int e0, int e1) {
        return kTetEdges[e0][0] == kTetEdges[e1][0] || kTetEdges[e0][0] == kTetEdges[e1][1] ||
               kTetEdges[e0][1] == kTetEdges[e1][0] || kTetEdges[e0][1] == kTetEdges[e1][1];
    };
    if (!edges_touch(ring[0], ring[1])) std::swap(ring[1], ring[2]);
    if (!edges_touch(ring[1], ring[2])) std::swap(ring[2], ring[3]);
    for (int i = 0; i < 4; ++i) {
        int e0 = ring[(size_t)i], e1 = ring[(size_t)((i + 1) % 4)];
        kids[(size_t)(4 + i)] =
            add_tet(h, {da, db, m[e0], m[e1]}, j + 1, TetKind::RedChild, GreenType::None,
                    tet_id);
    }
    return kids;
}

// ---------------------------------------------------------------------------
// Green refinement

namespace detail {

// Shorter of two candidate diagonals; ties by smallest lexicographic pair.
inline bool first_diagonal_shorter(const Hierarchy& h, int a0, int a1, int b0, int b1) {
    double la = norm(h.vertices[(size_t)a0].coords - h.vertices[(size_t)a1].coords);
    double lb = norm(h.vertices[(size_t)b0].coords - h.vertices[(size_t)b1].coords);
    if (std::abs(la - lb) > 1e-14 * std::max(la, lb)) return la < lb;
    return edge_key(a0, a1) < edge_key(b0, b1);
}

} // namespace detail

inline std::vector<int> green_refine(Hierarchy& h, int tet_id, const EdgeMarkMap& marks,
                                     int j) {
    const Tet t = h.tets[(size_t)tet_id];
    if (t.kind == TetKind::GreenChild)
        throw GreenRefinementForbidden("green_refine on green tet " + std::to_string(tet_id));
    if (t.level != j) throw WrongLevel("green_refine: L(tau) != current level");

    int pat = edge_pattern(h, tet_id, marks);
    GreenType type = classify_pattern(pat);
    std::vector<int> me;  // marked canonical edge indices
    for (int e = 0; e < 6; ++e)
        if (pat & (1 << e)) me.push_back(e);

    auto mid = [&](int e) {
        return h.get_or_create_midpoint(t.verts[kTetEdges[e][0]], t.verts[kTetEdges[e][1]],
                                        j + 1);
    };
    std::vector<int> kids;
    auto emit = [&](std::array<int, 4> verts) {
        kids.push_back(add_tet(h, verts, j + 1, TetKind::GreenChild, type, tet_id));
    };

    switch (type) {
        case GreenType::E1: {
            int e = me[0];
            int a = t.verts[kTetEdges[e][0]], b = t.verts[kTetEdges[e][1]];
            int c = -1, d = -1;
            for (int v : t.verts)
                if (v != a && v != b) (c < 0 ? c : d) = v;
            int m = mid(e);
            emit({m, c, d, a});
            emit({m, c, d, b});
            break;
        }
        case GreenType::E2F: {
            int e0 = me[0], e1 = me[1];
            // shared vertex vb; remaining face vertices va, vc; apex vd
            int vb = -1;
            for (int x : {kTetEdges[e0][0], kTetEdges[e0][1]})
                for (int y : {kTetEdges[e1][0], kTetEdges[e1][1]})
                    if (x == y) vb = x;
            int va = kTetEdges[e0][0] == vb ? kTetEdges[e0][1] : kTetEdges[e0][0];
            int vc = kTetEdges[e1][0] == vb ? kTetEdges[e1][1] : kTetEdges[e1][0];
            int vd = 0 + 1 + 2 + 3 - va - vb - vc;
            int A = t.verts[va], B = t.verts[vb], C = t.verts[vc], D = t.verts[vd];
            int m1 = mid(e0), m2 = mid(e1);  // m1 on AB, m2 on BC
            emit({B, m1, m2, D});
            if (detail::first_diagonal_shorter(h, m1, C, m2, A)) {
                emit({A, m1, C, D});
                emit({m1, m2, C, D});
            } else {
                emit({A, m1, m2, D});
                emit({A, m2, C, D});
            }
            break;
        }
        case GreenType::E2O: {
            int e0 = me[0], e1 = me[1];
            int A = t.verts[kTetEdges[e0][0]], B = t.verts[kTetEdges[e0][1]];
            int C = t.verts[kTetEdges[e1][0]], D = t.verts[kTetEdges[e1][1]];
            int m1 = mid(e0), m2 = mid(e1);
            emit({A, m1, C, m2});
            emit({A, m1, m2, D});
            emit({m1, B, C, m2});
            emit({m1, B, m2, D});
            break;
        }
        case GreenType::E3F: {
            // three edges covering vertices {va,vb,vc}; apex vd
            int vmask = 0;
            for (int e : me) vmask |= (1 << kTetEdges[e][0]) | (1 << kTetEdges[e][1]);
            int vd = -1;
            for (int i = 0; i < 4; ++i)
                if (!(vmask & (1 << i))) vd = i;
            int f[3], n = 0;
            for (int i = 0; i < 4; ++i)
                if (i != vd) f[n++] = i;
            int A = t.verts[f[0]], B = t.verts[f[1]], C = t.verts[f[2]], D = t.verts[vd];
            int mab = h.get_or_create_midpoint(A, B, j + 1);
            int mac = h.get_or_create_midpoint(A, C, j + 1);
            int mbc = h.get_or_create_midpoint(B, C, j + 1);
            emit({A, mab, mac, D});
            emit({B, mab, mbc, D});
            emit({C, mac, mbc, D});
            emit({mab, mbc, mac, D});
            break;
        }
        default:
            throw UnsupportedPattern("green_refine: pattern not in catalogue");
    }
    return kids;
}

// ---------------------------------------------------------------------------
// Closure

// Fixed point of the propagation rules: each seed marks all 6 of its edges;
// any tet whose pattern is not in {None, E1, E2F, E2O, E3F, Red} is promoted
// to all 6. At the fixed point, no marked edge may touch a green tet (A.4)
// or a tet with L(tau) < j (A.5).
inline EdgeMarkMap mark_closure(const Hierarchy& h, int j, const std::vector<int>& seeds) {
    const MeshLevel& lv = h.level(j);
    EdgeMarkMap marks;
    marks.level = j;

    auto mark_all = [&](int tet_id) {
        const Tet& t = h.tets[(size_t)tet_id];
        bool grew = false;
        for (auto& e : kTetEdges)
            grew |= marks.marked.insert(edge_key(t.verts[e[0]], t.verts[e[1]])).second;
        return grew;
    };

    for (int s : seeds) {
        if (!is_active(h, s, j)) throw NotActive("seed tet not active");
        const Tet& t = h.tets[(size_t)s];
        if (t.kind == TetKind::GreenChild)
            throw GreenRefinementForbidden("seed marks a green tet");
        if (t.level != j) throw WrongLevel("seed with L(tau) != j");
        mark_all(s);
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int tet_id : lv.active_tets) {
            int pat = edge_pattern(h, tet_id, marks);
            if (classify_pattern(pat) != GreenType::Promote) continue;
            const Tet& t = h.tets[(size_t)tet_id];
            if (t.kind == TetKind::GreenChild)
                throw GreenRefinementForbidden("closure would refine green tet " +
                                               std::to_string(tet_id));
            if (t.level != j)
                throw WrongLevel("closure reached tet with L(tau) < j");
            changed |= mark_all(tet_id);
        }
    }

    // A.4 / A.5 validation at the fixed point
    for (int tet_id : lv.active_tets) {
        if (edge_pattern(h, tet_id, marks) == 0) continue;
        const Tet& t = h.tets[(size_t)tet_id];
        if (t.kind == TetKind::GreenChild)
            throw GreenRefinementForbidden("marked edge touches green tet " +
                                           std::to_string(tet_id));
        if (t.level != j) throw WrongLevel("marked edge touches tet with L(tau) < j");
    }
    return marks;
}

// ---------------------------------------------------------------------------
// Level construction

inline void refine_level(Hierarchy& h, const EdgeMarkMap& marks) {
    int j = marks.level;
    if (j != h.max_level())
        throw WrongLevel("refine_level: marks are not for the finest level");
    const std::vector<int> active = h.level(j).active_tets;

    bool any = false;
    for (int tet_id : active)
        if (edge_pattern(h, tet_id, marks) != 0) any = true;
    if (!any) throw EmptyRefinement("no marked edges at level " + std::to_string(j));

    MeshLevel next;
    next.level = j + 1;
    for (int tet_id : active) {
        int pat = edge_pattern(h, tet_id, marks);
        GreenType type = classify_pattern(pat);
        switch (type) {
            case GreenType::None:
                next.active_tets.push_back(tet_id);
                break;
            case GreenType::Red: {
                auto kids = red_refine(h, tet_id, j);
                next.active_tets.insert(next.active_tets.end(), kids.begin(), kids.end());
                break;
            }
            case GreenType::E1:
            case GreenType::E2F:
            case GreenType::E2O:
            case GreenType::E3F: {
                auto kids = green_refine(h, tet_id, marks, j);
                next.active_tets.insert(next.active_tets.end(), kids.begin(), kids.end());
                break;
            }
            default:
                throw UnsupportedPattern("refine_level: marks not closed");
        }
    }
    h.levels.push_back(std::move(next));
    finalize_level(h, j + 1);

    // Omega_{j+1}: union of stars of vertices born at level j+1
    MeshLevel& lv = h.level(j + 1);
    for (auto& [vid, s] : lv.vertex_star)
        if (h.vertices[(size_t)vid].birth_level == j + 1)
            lv.region_tets.insert(s.begin(), s.end());

    std::string w;
    if (!conforming(h, j + 1, &w))
        throw NonConformingInput("refinement produced nonconforming level: " + w);
}

// ---------------------------------------------------------------------------
// Marker strategies

struct MarkerStrategy {
    enum Kind { Uniform, Ball, VertexSingularity } kind = Uniform;
    Vec3 center{};        // Ball
    double radius = 0;    // Ball
    Vec3 corner{};        // VertexSingularity (coordinates of a level-0 vertex)
};

inline std::vector<int> marker(const Hierarchy& h, const MarkerStrategy& s, int j) {
    const MeshLevel& lv = h.level(j);
    std::vector<int> seeds;
    auto refinable = [&](int tet_id) {
        const Tet& t = h.tets[(size_t)tet_id];
        return t.level == j && t.kind != TetKind::GreenChild;
    };
    switch (s.kind) {
        case MarkerStrategy::Uniform:
            for (int t : lv.active_tets)
                if (refinable(t)) seeds.push_back(t);
            break;
        case MarkerStrategy::Ball:
            for (int t : lv.active_tets) {
                if (!refinable(t)) continue;
                auto c = h.tet_coords(t);
                bool hit = false;
                auto probe = [&](const Vec3& p) { hit |= norm(p - s.center) <= s.radius; };
                for (auto& p : c) probe(p);
                probe((c[0] + c[1] + c[2] + c[3]) * 0.25);
                for (int a = 0; a < 4 && !hit; ++a)
                    for (int b = a + 1; b < 4; ++b) probe(midpoint(c[a], c[b]));
                if (hit) seeds.push_back(t);
            }
            break;
        case MarkerStrategy::VertexSingularity: {
            int vid = -1;
            for (const Vertex& v : h.vertices)
                if (v.coords == s.corner) {
                    vid = v.id;
                    break;
                }
            if (vid < 0) throw UnknownVertex("vertex_singularity: no vertex at given corner");
            for (int t : star(h, vid, j))
                if (refinable(t)) seeds.push_back(t);
            break;
        }
    }
    return seeds;
}

} // namespace tetml

#endif
