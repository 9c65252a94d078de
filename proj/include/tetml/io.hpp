#ifndef TETML_IO_HPP
#define TETML_IO_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "tetml/refine.hpp"

namespace tetml {

// Legacy ASCII VTK unstructured grid of one hierarchy level, with per-cell
// "level" (generation) and "kind" (0 root, 1 red, 2 green) arrays.
inline void write_vtk(const Hierarchy& h, int j, std::ostream& os) {
    const MeshLevel& lv = h.level(j);
    std::map<int, int> reindex;
    for (const auto& [vid, st] : lv.vertex_star) reindex.emplace(vid, 0);
    int next = 0;
    for (auto& [vid, idx] : reindex) idx = next++;

    os << "# vtk DataFile Version 3.0\n";
    os << "tetrahedral mesh level " << j << "\n";
    os << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << reindex.size() << " double\n";
    char buf[128];
    for (const auto& [vid, idx] : reindex) {
        const Vec3& c = h.vertices[(size_t)vid].coords;
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", c.x, c.y, c.z);
        os << buf;
    }
    size_t m = lv.active_tets.size();
    os << "CELLS " << m << " " << 5 * m << "\n";
    for (int t : lv.active_tets) {
        const Tet& tet = h.tets[(size_t)t];
        os << "4 " << reindex.at(tet.verts[0]) << " " << reindex.at(tet.verts[1]) << " "
           << reindex.at(tet.verts[2]) << " " << reindex.at(tet.verts[3]) << "\n";
    }
    os << "CELL_TYPES " << m << "\n";
    for (size_t i = 0; i < m; ++i) os << "10\n";
    os << "CELL_DATA " << m << "\n";
    os << "SCALARS level int 1\nLOOKUP_TABLE default\n";
    for (int t : lv.active_tets) os << h.tets[(size_t)t].level << "\n";
    os << "SCALARS kind int 1\nLOOKUP_TABLE default\n";
    for (int t : lv.active_tets) os << (int)h.tets[(size_t)t].kind << "\n";
}

// ---------------------------------------------------------------------------
// Scenario construction shared by the CLI and the tests

enum class Scenario { Uniform, Corner, Ball };

inline Scenario parse_scenario(const std::string& s) {
    if (s == "uniform") return Scenario::Uniform;
    if (s == "corner") return Scenario::Corner;
    if (s == "ball") return Scenario::Ball;
    throw ConfigError("unknown scenario '" + s + "'");
}

inline std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Uniform: return "uniform";
        case Scenario::Corner: return "corner";
        default: return "ball";
    }
}

inline MarkerStrategy scenario_strategy(Scenario s, int j) {
    MarkerStrategy m;
    switch (s) {
        case Scenario::Uniform:
            m.kind = MarkerStrategy::Uniform;
            break;
        case Scenario::Corner:
            m.kind = MarkerStrategy::VertexSingularity;
            m.corner = {0, 0, 0};
            break;
        case Scenario::Ball:
            m.kind = MarkerStrategy::Ball;
            m.center = {0.5, 0.5, 0.5};
            // shrinking radius keeps the refined zone strictly inside the
            // previously refined zone, which the closure rules require
            m.radius = 0.3 * std::pow(0.5, j);
            break;
    }
    return m;
}

inline Hierarchy build_scenario(Scenario s, int J) {
    Hierarchy h = build_unit_cube();
    for (int j = 0; j < J; ++j)
        refine_level(h, mark_closure(h, j, marker(h, scenario_strategy(s, j), j)));
    return h;
}

} // namespace tetml

#endif
