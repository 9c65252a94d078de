#ifndef TETML_TRANSFER_HPP
#define TETML_TRANSFER_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "tetml/fem.hpp"
#include "tetml/mesh.hpp"
#include "tetml/solver.hpp"

namespace tetml {

// ---------------------------------------------------------------------------
// Prolongation (matrix form of the nested embedding S_j into S_{j+1})

// Rows: interior DOF of level j+1. A surviving coarse node carries 1, an edge
// midpoint carries 1/2 from each interior parent endpoint.
inline SparseMatrix build_prolongation(const Hierarchy& h, int j) {
    const MeshLevel& coarse = h.level(j);
    const MeshLevel& fine = h.level(j + 1);
    std::map<std::pair<int, int>, double> t;
    for (size_t r = 0; r < fine.interior_nodes.size(); ++r) {
        int vid = fine.interior_nodes[r];
        const Vertex& v = h.vertices[(size_t)vid];
        auto it = coarse.interior_index.find(vid);
        if (it != coarse.interior_index.end()) {
            t[{(int)r, it->second}] = 1.0;
        } else if (v.parent_edge[0] >= 0) {
            for (int pv : v.parent_edge) {
                auto pit = coarse.interior_index.find(pv);
                if (pit != coarse.interior_index.end()) t[{(int)r, pit->second}] = 0.5;
            }
        }
        // otherwise: new node whose parents are all boundary -> zero row
    }
    return SparseMatrix::from_triplets(fine.dof(), coarse.dof(), t);
}

inline std::vector<double> prolong(const SparseMatrix& P, const std::vector<double>& u) {
    return P.apply(u);
}

inline std::vector<double> restrict_dual(const SparseMatrix& P, const std::vector<double>& r,
                                         int coarse_dof) {
    std::vector<double> out((size_t)coarse_dof, 0.0);
    for (int i = 0; i < P.n; ++i)
        for (int k = P.row_ptr[(size_t)i]; k < P.row_ptr[(size_t)i + 1]; ++k)
            out[(size_t)P.col[(size_t)k]] += P.val[(size_t)k] * r[(size_t)i];
    return out;
}

// I_j action: coarse coefficients are the fine coefficients at surviving nodes.
inline std::vector<double> nodal_restrict(const Hierarchy& h, int j,
                                          const std::vector<double>& u_fine) {
    const MeshLevel& coarse = h.level(j);
    const MeshLevel& fine = h.level(j + 1);
    if ((int)u_fine.size() != fine.dof())
        throw DimensionMismatch("nodal_restrict: size mismatch");
    std::vector<double> out((size_t)coarse.dof(), 0.0);
    for (size_t i = 0; i < coarse.interior_nodes.size(); ++i) {
        auto it = fine.interior_index.find(coarse.interior_nodes[i]);
        if (it != fine.interior_index.end()) out[i] = u_fine[(size_t)it->second];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scaled basis exponents L_{j,i}

struct ScaledBasisExponents {
    int level = 0;
    std::vector<int> L;  // aligned with interior_nodes
};

inline ScaledBasisExponents scaled_exponents(const Hierarchy& h, int j) {
    const MeshLevel& lv = h.level(j);
    ScaledBasisExponents s;
    s.level = j;
    s.L.reserve(lv.interior_nodes.size());
    for (int vid : lv.interior_nodes) {
        int L = j;
        for (int t : star(h, vid, j)) L = std::min(L, h.tets[(size_t)t].level);
        s.L.push_back(L);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Level systems plus projections

struct TransferChain {
    const Hierarchy* h = nullptr;
    std::vector<LevelSystem> sys;   // assembled per level
    std::vector<SparseMatrix> P;    // P[j]: level j -> level j+1
    mutable std::vector<double> mass_kappa;  // lazily estimated per level

    int finest() const { return (int)sys.size() - 1; }

    double kappa_mass(int j) const {
        if (mass_kappa[(size_t)j] == 0) {
            const SparseMatrix& M = sys[(size_t)j].M;
            if (M.n == 0) {
                mass_kappa[(size_t)j] = 1;
            } else {
                auto [lmin, lmax] = extreme_eigs(
                    [&](const std::vector<double>& x) { return M.apply(x); }, M.n,
                    std::min(M.n, 60));
                mass_kappa[(size_t)j] = lmin > 0 ? lmax / lmin : 1;
            }
        }
        return mass_kappa[(size_t)j];
    }

    std::vector<double> prolong_to(int from, int to, std::vector<double> u) const {
        for (int j = from; j < to; ++j) u = P[(size_t)j].apply(u);
        return u;
    }
};

inline TransferChain build_transfer(const Hierarchy& h, const Coefficients& coeff) {
    TransferChain c;
    c.h = &h;
    for (int j = 0; j <= h.max_level(); ++j) c.sys.push_back(assemble(h, j, coeff));
    for (int j = 0; j < h.max_level(); ++j) c.P.push_back(build_prolongation(h, j));
    c.mass_kappa.assign(c.sys.size(), 0.0);
    return c;
}

namespace detail {

// Mass solve M_j x = rhs by diagonally preconditioned CG.
inline std::vector<double> mass_solve(const TransferChain& c, int j,
                                      const std::vector<double>& rhs, double tol) {
    const SparseMatrix& M = c.sys[(size_t)j].M;
    if (M.n == 0) return {};
    auto diag = M.diagonal();
    LinearOperator jacobi = [diag](const std::vector<double>& r) {
        std::vector<double> z(r.size());
        for (size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag[i];
        return z;
    };
    auto [x, rep] = pcg(M, rhs, jacobi, tol, 4 * M.n + 100);
    if (!rep.converged)
        throw SolverStall("mass solve did not converge at level " + std::to_string(j));
    return x;
}

} // namespace detail

// Exact L2-projection of u (on level `from`) onto S_j.
inline std::vector<double> l2_project(const TransferChain& c, std::vector<double> u,
                                      int from, int j) {
    if (j > from) throw LevelMissing("l2_project: target finer than source");
    std::vector<double> rhs = c.sys[(size_t)from].M.apply(u);
    for (int l = from; l > j; --l)
        rhs = restrict_dual(c.P[(size_t)l - 1], rhs, c.sys[(size_t)l - 1].M.n);
    return detail::mass_solve(c, j, rhs, 1e-12);
}

// Approximate projection Q_j^a of u on S_{j+1} down to S_j: the mass solve is
// stopped at relative residual gamma / sqrt(kappa(M_j)), which guarantees
// ||(Q^a - Q)u|| <= gamma ||Q u|| in L2. gamma = 0 routes to the exact solve.
inline std::vector<double> approx_project(const TransferChain& c,
                                          const std::vector<double>& u, int j,
                                          double gamma) {
    if (gamma < 0) throw ConfigError("approx_project: negative gamma");
    std::vector<double> rhs =
        restrict_dual(c.P[(size_t)j], c.sys[(size_t)j + 1].M.apply(u), c.sys[(size_t)j].M.n);
    double tol = gamma == 0 ? 1e-12 : std::max(1e-12, gamma / std::sqrt(c.kappa_mass(j)));
    return detail::mass_solve(c, j, rhs, tol);
}

// tilde{Q}_k via the level sweep of I_j + Q_j^a (I_{j+1} - I_j), applied
// right-to-left starting from u on the finest level. Result lives on S_k.
inline std::vector<double> tilde_q(const TransferChain& c, int k, std::vector<double> u,
                                   double gamma) {
    const Hierarchy& h = *c.h;
    int J = c.finest();
    if (k < 0 || k > J) throw LevelMissing("tilde_q: level out of range");
    for (int j = J - 1; j >= k; --j) {
        std::vector<double> coarse = nodal_restrict(h, j, u);
        std::vector<double> osc = u;
        std::vector<double> pc = c.P[(size_t)j].apply(coarse);
        for (size_t i = 0; i < osc.size(); ++i) osc[i] -= pc[i];
        std::vector<double> qa = approx_project(c, osc, j, gamma);
        for (size_t i = 0; i < coarse.size(); ++i) coarse[i] += qa[i];
        u = std::move(coarse);
    }
    return u;
}

// All WHB slices (tilde{Q}_j - tilde{Q}_{j-1})u in one sweep; slices[j] lives
// on level j (slice 0 is tilde{Q}_0 u itself).
inline std::vector<std::vector<double>> whb_slices(const TransferChain& c,
                                                   const std::vector<double>& u,
                                                   double gamma) {
    int J = c.finest();
    std::vector<std::vector<double>> v((size_t)J + 1);
    v[(size_t)J] = u;
    for (int j = J - 1; j >= 0; --j) {
        const std::vector<double>& fine = v[(size_t)j + 1];
        std::vector<double> coarse = nodal_restrict(*c.h, j, fine);
        std::vector<double> osc = fine;
        std::vector<double> pc = c.P[(size_t)j].apply(coarse);
        for (size_t i = 0; i < osc.size(); ++i) osc[i] -= pc[i];
        std::vector<double> qa = approx_project(c, osc, j, gamma);
        for (size_t i = 0; i < coarse.size(); ++i) coarse[i] += qa[i];
        v[(size_t)j] = std::move(coarse);
    }
    std::vector<std::vector<double>> slices((size_t)J + 1);
    slices[0] = v[0];
    for (int j = 1; j <= J; ++j) {
        std::vector<double> s = v[(size_t)j];
        std::vector<double> pc = c.P[(size_t)j - 1].apply(v[(size_t)j - 1]);
        for (size_t i = 0; i < s.size(); ++i) s[i] -= pc[i];
        slices[(size_t)j] = std::move(s);
    }
    return slices;
}

// Exact-projection slices (Q_j - Q_{j-1})u, same layout.
inline std::vector<std::vector<double>> bpx_slices(const TransferChain& c,
                                                   const std::vector<double>& u) {
    int J = c.finest();
    std::vector<std::vector<double>> q((size_t)J + 1);
    q[(size_t)J] = u;
    for (int j = J - 1; j >= 0; --j) q[(size_t)j] = l2_project(c, u, J, j);
    std::vector<std::vector<double>> slices((size_t)J + 1);
    slices[0] = q[0];
    for (int j = 1; j <= J; ++j) {
        std::vector<double> s = q[(size_t)j];
        std::vector<double> pc = c.P[(size_t)j - 1].apply(q[(size_t)j - 1]);
        for (size_t i = 0; i < s.size(); ++i) s[i] -= pc[i];
        slices[(size_t)j] = std::move(s);
    }
    return slices;
}

// ---------------------------------------------------------------------------
// Element dual basis (biorthogonal linear polynomials)

struct DualBasisElement {
    int tet = -1;
    // psi[l][m]: coefficient of barycentric lambda_m in psi_l; biorthogonal to
    // the scaled basis restricted to the tet.
    std::array<std::array<double, 4>, 4> psi{};
};

// Solves the 4x4 element mass system against the scaled basis restrictions.
// For the unscaled basis psi_l = (20 lambda_l - 4) / vol.
inline DualBasisElement dual_basis(const Hierarchy& h, int j, int tet_id) {
    const Tet& t = h.tets[(size_t)tet_id];
    auto coords = h.tet_coords(tet_id);
    double vol = tet_volume(coords);
    if (vol <= 0) throw DegenerateTet("dual_basis: nonpositive volume");

    // scale factor 2^{(3/2) L_{j,i}} per corner (boundary corners get the same
    // min-over-star rule)
    DualBasisElement d;
    d.tet = tet_id;
    for (int l = 0; l < 4; ++l) {
        int vid = t.verts[l];
        int L = j;
        for (int s : star(h, vid, j)) L = std::min(L, h.tets[(size_t)s].level);
        double scale = std::pow(2.0, 1.5 * L);
        for (int m = 0; m < 4; ++m)
            d.psi[(size_t)l][(size_t)m] = (l == m ? 20.0 : 0.0) - 4.0;
        for (int m = 0; m < 4; ++m) d.psi[(size_t)l][(size_t)m] /= vol * scale;
    }
    return d;
}

// E_i: number of tets of T_j in the support of the basis function at x_i.
inline int star_count(const Hierarchy& h, int vid, int j) {
    return (int)star(h, vid, j).size();
}

} // namespace tetml

#endif
