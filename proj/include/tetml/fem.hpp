#ifndef TETML_FEM_HPP
#define TETML_FEM_HPP

#include <array>
#include <functional>
#include <map>

#include "tetml/mesh.hpp"
#include "tetml/sparse.hpp"

namespace tetml {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

// Coefficients of a(u,v) = int p grad(u).grad(v) + q u v; sampled once per tet
// at the centroid.
struct Coefficients {
    std::function<Mat3(const Vec3&)> p = [](const Vec3&) { return identity3(); };
    std::function<double(const Vec3&)> q = [](const Vec3&) { return 0.0; };
    std::function<double(const Vec3&)> f = [](const Vec3&) { return 0.0; };

    static Coefficients poisson(std::function<double(const Vec3&)> rhs) {
        Coefficients c;
        c.f = std::move(rhs);
        return c;
    }
    // p = I, q = 1: the Gram matrices of the full H1 norm
    static Coefficients h1() {
        Coefficients c;
        c.q = [](const Vec3&) { return 1.0; };
        return c;
    }
};

struct ElementMatrices {
    std::array<std::array<double, 4>, 4> stiffness{};
    std::array<std::array<double, 4>, 4> mass{};  // with the element's q
    std::array<double, 4> load{};
};

// Constant P1 gradients: rows of D^{-1} for the last three, minus their sum
// for the first.
inline std::array<Vec3, 4> p1_gradients(const std::array<Vec3, 4>& v) {
    Vec3 e1 = v[1] - v[0], e2 = v[2] - v[0], e3 = v[3] - v[0];
    double det = dot(e1, cross(e2, e3));
    if (det == 0) throw DegenerateTet("zero volume in p1_gradients");
    Vec3 g1 = cross(e2, e3) * (1.0 / det);
    Vec3 g2 = cross(e3, e1) * (1.0 / det);
    Vec3 g3 = cross(e1, e2) * (1.0 / det);
    Vec3 g0 = (g1 + g2 + g3) * -1.0;
    return {g0, g1, g2, g3};
}

inline ElementMatrices element_matrices(const std::array<Vec3, 4>& v,
                                        const Coefficients& coeff) {
    double vol = tet_volume(v);
    if (vol <= 0) throw DegenerateTet("element_matrices: nonpositive volume");
    Vec3 centroid = (v[0] + v[1] + v[2] + v[3]) * 0.25;
    Mat3 p = coeff.p(centroid);
    double q = coeff.q(centroid);

    auto g = p1_gradients(v);
    ElementMatrices em;
    for (int a = 0; a < 4; ++a) {
        Vec3 pg{};
        for (int r = 0; r < 3; ++r)
            pg[r] = p[(size_t)r][0] * g[(size_t)a].x + p[(size_t)r][1] * g[(size_t)a].y +
                    p[(size_t)r][2] * g[(size_t)a].z;
        for (int b = 0; b < 4; ++b)
            em.stiffness[(size_t)a][(size_t)b] = vol * dot(pg, g[(size_t)b]);
    }
    // (d+1)(d+2) = 20 for d = 3: diagonal vol/10, off-diagonal vol/20 at q = 1
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            em.mass[(size_t)a][(size_t)b] = q * vol / 20.0 * (a == b ? 2.0 : 1.0);
    for (int a = 0; a < 4; ++a) em.load[(size_t)a] = vol / 4.0 * coeff.f(v[(size_t)a]);
    return em;
}

// ||g||^2_{L2(tau)} = vol/20 ( sum g_i^2 + (sum g_i)^2 ) for linear g, d = 3.
inline double l2_norm_linear(const std::array<double, 4>& values,
                             const std::array<Vec3, 4>& v) {
    double vol = tet_volume(v);
    if (vol <= 0) throw DegenerateTet("l2_norm_linear: nonpositive volume");
    double s1 = 0, s2 = 0;
    for (double g : values) {
        s1 += g * g;
        s2 += g;
    }
    return std::sqrt(vol / 20.0 * (s1 + s2 * s2));
}

struct LevelSystem {
    SparseMatrix A;           // p, q of the supplied coefficients, interior DOF
    SparseMatrix M;           // unit mass, interior DOF
    SparseMatrix H;           // stiffness(p=I) + unit mass: the H1 Gram matrix
    std::vector<double> F;
};

// Assembly over interior DOF only; homogeneous Dirichlet by elimination.
inline LevelSystem assemble(const Hierarchy& h, int j, const Coefficients& coeff) {
    const MeshLevel& lv = h.level(j);
    int n = lv.dof();
    std::map<std::pair<int, int>, double> ta, tm, th;
    LevelSystem sys;
    sys.F.assign((size_t)n, 0.0);

    Coefficients unit = Coefficients::h1();
    for (int t : lv.active_tets) {
        auto coords = h.tet_coords(t);
        auto em = element_matrices(coords, coeff);
        auto eh = element_matrices(coords, unit);
        const Tet& tet = h.tets[(size_t)t];
        int idx[4];
        for (int a = 0; a < 4; ++a) {
            auto it = lv.interior_index.find(tet.verts[a]);
            idx[a] = it == lv.interior_index.end() ? -1 : it->second;
        }
        for (int a = 0; a < 4; ++a) {
            if (idx[a] < 0) continue;
            sys.F[(size_t)idx[a]] += em.load[(size_t)a];
            for (int b = 0; b < 4; ++b) {
                if (idx[b] < 0) continue;
                std::pair<int, int> rc{idx[a], idx[b]};
                ta[rc] += em.stiffness[(size_t)a][(size_t)b] + em.mass[(size_t)a][(size_t)b];
                tm[rc] += eh.mass[(size_t)a][(size_t)b];
                th[rc] += eh.stiffness[(size_t)a][(size_t)b] + eh.mass[(size_t)a][(size_t)b];
            }
        }
    }
    sys.A = SparseMatrix::from_triplets(n, ta);
    sys.M = SparseMatrix::from_triplets(n, tm);
    sys.H = SparseMatrix::from_triplets(n, th);
    return sys;
}

inline double h1_norm(const SparseMatrix& h1_gram, const std::vector<double>& u) {
    if ((int)u.size() != h1_gram.n) throw DimensionMismatch("h1_norm: size mismatch");
    return std::sqrt(dot(u, h1_gram.apply(u)));
}

inline double l2_norm(const SparseMatrix& mass, const std::vector<double>& u) {
    if ((int)u.size() != mass.n) throw DimensionMismatch("l2_norm: size mismatch");
    return std::sqrt(std::max(0.0, dot(u, mass.apply(u))));
}

} // namespace tetml

#endif
