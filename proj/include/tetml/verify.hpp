#ifndef TETML_VERIFY_HPP
#define TETML_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tetml/precond.hpp"
#include "tetml/refine.hpp"
#include "tetml/transfer.hpp"

namespace tetml {

using ordered_json = nlohmann::ordered_json;

struct CheckResult {
    std::string check;
    std::string anchor;  // short machine-readable id of the property checked
    ordered_json constants = ordered_json::object();
    bool pass = true;
    std::vector<std::string> witnesses;

    CheckResult() = default;
    CheckResult(std::string ck, std::string an)
        : check(std::move(ck)), anchor(std::move(an)) {}

    void fail(const std::string& w) {
        pass = false;
        witnesses.push_back(w);
    }
};

struct VerifyReport {
    uint64_t seed = 0;
    std::vector<CheckResult> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    ordered_json to_json() const {
        ordered_json arr = ordered_json::array();
        for (const auto& c : checks) {
            ordered_json item;
            item["check"] = c.check;
            item["anchor"] = c.anchor;
            item["constants"] = c.constants;
            item["pass"] = c.pass;
            item["witnesses"] = c.witnesses;
            arr.push_back(item);
        }
        ordered_json root;
        root["seed"] = seed;
        root["checks"] = arr;
        return root;
    }

    void print_table(std::ostream& os) const {
        char buf[256];
        for (const auto& c : checks) {
            std::snprintf(buf, sizeof buf, "%-28s %-30s %s\n", c.check.c_str(),
                          c.anchor.c_str(), c.pass ? "pass" : "FAIL");
            os << buf;
            if (!c.pass)
                for (const auto& w : c.witnesses) os << "    witness: " << w << "\n";
        }
    }
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Structural assumptions on the hierarchy

inline std::vector<CheckResult> check_assumptions(const Hierarchy& h) {
    std::vector<CheckResult> out;
    int J = h.max_level();

    {  // nestedness: each active tet is inherited or a child of a coarser tet,
       // and children tile their father
        CheckResult c{"A1-nestedness", "children-tile-father"};
        for (int j = 1; j <= J; ++j) {
            std::unordered_set<int> prev(h.level(j - 1).active_tets.begin(),
                                         h.level(j - 1).active_tets.end());
            for (int t : h.level(j).active_tets) {
                const Tet& tet = h.tets[(size_t)t];
                if (prev.count(t)) continue;
                if (tet.parent < 0 || !prev.count(tet.parent)) {
                    c.fail("tet " + std::to_string(t) + " at level " + std::to_string(j) +
                           " has no active father at level " + std::to_string(j - 1));
                }
            }
        }
        double worst = 0;
        for (const Tet& t : h.tets) {
            if (t.children.empty()) continue;
            double vp = h.tet_vol(t.id), vc = 0;
            for (int ch : t.children) vc += h.tet_vol(ch);
            worst = std::max(worst, std::abs(vc - vp) / vp);
            if (std::abs(vc - vp) > 1e-12 * vp)
                c.fail("children of tet " + std::to_string(t.id) +
                       " do not tile it: volume gap " + detail::fmt(vc - vp));
        }
        c.constants["max_rel_volume_gap"] = worst;
        out.push_back(std::move(c));
    }

    {  // conformity at every level
        CheckResult c{"A2-conformity", "pairwise-intersections-simplicial"};
        for (int j = 0; j <= J; ++j) {
            std::string w;
            bool ok = (int)h.level(j).active_tets.size() <= 300000
                          ? conforming_exhaustive(h, j, &w)
                          : conforming(h, j, &w);
            if (!ok) c.fail("level " + std::to_string(j) + ": " + w);
        }
        c.constants["levels_scanned"] = J + 1;
        out.push_back(std::move(c));
    }

    {  // shape regularity bounded away from zero
        CheckResult c{"A3-nondegeneracy", "shape-ratio-bounded"};
        double min0 = 1e300, minAll = 1e300;
        int worst_tet = -1;
        for (int j = 0; j <= J; ++j)
            for (int t : h.level(j).active_tets) {
                double r = shape_ratio(h.tet_coords(t));
                if (j == 0) min0 = std::min(min0, r);
                if (r < minAll) {
                    minAll = r;
                    worst_tet = t;
                }
            }
        c.constants["min_ratio_level0"] = min0;
        c.constants["min_ratio_all"] = minAll;
        if (minAll < 0.5 * min0)
            c.fail("tet " + std::to_string(worst_tet) + " ratio " + detail::fmt(minAll) +
                   " below half of coarse minimum " + detail::fmt(min0));
        out.push_back(std::move(c));
    }

    {  // irregular tets are never refined
        CheckResult c{"A4-greens-final", "green-children-leaf"};
        for (const Tet& t : h.tets)
            if (t.kind == TetKind::GreenChild && !t.children.empty())
                c.fail("green tet " + std::to_string(t.id) + " was refined");
        out.push_back(std::move(c));
    }

    {  // only current-level tets are refined
        CheckResult c{"A5-level-discipline", "refined-at-own-level"};
        for (const Tet& t : h.tets)
            if (!t.children.empty()) {
                int cl = h.tets[(size_t)t.children[0]].level;
                if (cl != t.level + 1)
                    c.fail("tet " + std::to_string(t.id) + " of level " +
                           std::to_string(t.level) + " refined at step to level " +
                           std::to_string(cl));
            }
        out.push_back(std::move(c));
    }

    {  // refinement catalogue discipline
        CheckResult c{"A6-catalogue", "child-counts-match-pattern"};
        auto expect = [](GreenType g) {
            switch (g) {
                case GreenType::E1: return 2;
                case GreenType::E2F: return 3;
                case GreenType::E2O: return 4;
                case GreenType::E3F: return 4;
                default: return 8;
            }
        };
        for (const Tet& t : h.tets) {
            if (t.children.empty()) continue;
            GreenType g = h.tets[(size_t)t.children[0]].kind == TetKind::RedChild
                              ? GreenType::Red
                              : h.tets[(size_t)t.children[0]].green_subtype;
            if ((int)t.children.size() != expect(g))
                c.fail("tet " + std::to_string(t.id) + " has " +
                       std::to_string(t.children.size()) + " children for its pattern");
            for (int ch : t.children) {
                const Tet& cc = h.tets[(size_t)ch];
                bool red = cc.kind == TetKind::RedChild;
                if (red != (g == GreenType::Red) ||
                    (!red && cc.green_subtype != g))
                    c.fail("mixed child kinds under tet " + std::to_string(t.id));
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Level differences between adjacent elements

struct GenerationBounds {
    // prefix[j] = max level difference over all pairs in levels 0..j
    std::vector<int> face_prefix, edge_prefix, vertex_prefix;
    int face = 0, edge = 0, vertex = 0;  // values at the finest level
};

inline GenerationBounds generation_bounds(const Hierarchy& h) {
    GenerationBounds g;
    int J = h.max_level();
    int face = 0, edge = 0, vertex = 0;
    for (int j = 0; j <= J; ++j) {
        const MeshLevel& lv = h.level(j);
        for (const auto& [vid, tets] : lv.vertex_star)
            for (size_t a = 0; a < tets.size(); ++a)
                for (size_t b = a + 1; b < tets.size(); ++b) {
                    const Tet& ta = h.tets[(size_t)tets[a]];
                    const Tet& tb = h.tets[(size_t)tets[b]];
                    int shared = 0;
                    for (int va : ta.verts)
                        for (int vb : tb.verts)
                            if (va == vb) ++shared;
                    int d = std::abs(ta.level - tb.level);
                    vertex = std::max(vertex, d);
                    if (shared >= 2) edge = std::max(edge, d);
                    if (shared >= 3) face = std::max(face, d);
                }
        g.face_prefix.push_back(face);
        g.edge_prefix.push_back(edge);
        g.vertex_prefix.push_back(vertex);
    }
    g.face = face;
    g.edge = edge;
    g.vertex = vertex;
    return g;
}

inline CheckResult check_generation_bounds(const Hierarchy& h) {
    CheckResult c{"generation-bounds", "face-level-difference-le-1"};
    GenerationBounds g = generation_bounds(h);
    c.constants["face"] = g.face;
    c.constants["edge"] = g.edge;
    c.constants["vertex"] = g.vertex;
    if (g.face > 1) c.fail("face-adjacent level difference " + std::to_string(g.face));
    int J = h.max_level();
    if (J >= 3) {
        if (g.edge_prefix[(size_t)J] != g.edge_prefix[(size_t)J - 1])
            c.fail("edge bound still growing at the finest level");
        if (g.vertex_prefix[(size_t)J] != g.vertex_prefix[(size_t)J - 1])
            c.fail("vertex bound still growing at the finest level");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Patchwise quasiuniformity and child/ancestor diameter scaling

inline CheckResult check_patch_quasiuniformity(const Hierarchy& h) {
    CheckResult c{"patch-quasiuniformity", "touching-diameters-comparable"};
    int J = h.max_level();

    // gamma0: worst diameter ratio among touching elements of equal generation;
    // adjacent generations may then differ by at most a further factor of two
    // per generation step.
    double gamma0 = 1, worst = 1;
    for (int j = 0; j <= J; ++j) {
        const MeshLevel& lv = h.level(j);
        for (const auto& [vid, tets] : lv.vertex_star)
            for (size_t a = 0; a < tets.size(); ++a)
                for (size_t b = a + 1; b < tets.size(); ++b) {
                    double da = tet_diameter(h.tet_coords(tets[a]));
                    double db = tet_diameter(h.tet_coords(tets[b]));
                    double r = std::max(da / db, db / da);
                    worst = std::max(worst, r);
                    if (h.tets[(size_t)tets[a]].level == h.tets[(size_t)tets[b]].level)
                        gamma0 = std::max(gamma0, r);
                }
    }
    GenerationBounds g = generation_bounds(h);
    double bound = std::pow(2.0, std::max({1, g.edge, g.vertex})) * gamma0;
    c.constants["max_ratio"] = worst;
    c.constants["same_generation_ratio"] = gamma0;
    c.constants["bound"] = bound;
    if (worst > bound * (1 + 1e-9))
        c.fail("touching ratio " + detail::fmt(worst) + " exceeds bound");

    // diam(tau) against 2^{-L} times the root ancestor's diameter
    std::vector<double> c1((size_t)J + 1, 1e300), c2((size_t)J + 1, 0.0);
    std::vector<int> root_of(h.tets.size(), -1);
    for (const Tet& t : h.tets)
        root_of[(size_t)t.id] = t.parent < 0 ? t.id : root_of[(size_t)t.parent];
    for (int j = 0; j <= J; ++j)
        for (int t : h.level(j).active_tets) {
            const Tet& tet = h.tets[(size_t)t];
            double droot = tet_diameter(h.tet_coords(root_of[(size_t)t]));
            double r = tet_diameter(h.tet_coords(t)) * std::pow(2.0, tet.level) / droot;
            for (int jj = j; jj <= J; ++jj) {
                // contributes to the prefix constants of every finer snapshot
                c1[(size_t)jj] = std::min(c1[(size_t)jj], r);
                c2[(size_t)jj] = std::max(c2[(size_t)jj], r);
            }
        }
    c.constants["child_ancestor_c1"] = c1[(size_t)J];
    c.constants["child_ancestor_c2"] = c2[(size_t)J];
    // new similarity classes keep appearing for a few levels before the
    // constants settle; only assert stability once they can have saturated
    if (J >= 4) {
        double sJ = c2[(size_t)J] / c1[(size_t)J];
        double sP = c2[(size_t)J - 1] / c1[(size_t)J - 1];
        c.constants["spread_finest"] = sJ;
        c.constants["spread_previous"] = sP;
        if (sJ > 1.15 * sP)
            c.fail("diameter-scaling spread grew by " + detail::fmt(sJ / sP) +
                   " at the finest level");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Smoothing-node complexity

inline CheckResult check_smoothing_bound(const Hierarchy& h) {
    CheckResult c{"smoothing-bound", "sum-le-5/3-NJ-minus-2/3-N0"};
    int J = h.max_level();
    long sum = 0;
    ordered_json per_level = ordered_json::array();
    for (int j = 0; j <= J; ++j) {
        long s = (long)smoothing_set(h, j).nodes.size();
        sum += s;
        per_level.push_back(s);
    }
    long NJ = h.level(J).dof(), N0 = h.level(0).dof();
    c.constants["sum"] = sum;
    c.constants["per_level"] = per_level;
    c.constants["N_J"] = NJ;
    c.constants["N_0"] = N0;
    c.constants["slack_times_3"] = 5 * NJ - 2 * N0 - 3 * sum;
    if (3 * sum > 5 * NJ - 2 * N0)
        c.fail("3*sum = " + std::to_string(3 * sum) + " exceeds " +
               std::to_string(5 * NJ - 2 * N0));
    if (J == 0 && 3 * sum != 5 * NJ - 2 * N0) c.fail("expected equality at a single level");
    return c;
}

// ---------------------------------------------------------------------------
// Riesz stability of the scaled nodal basis

inline CheckResult check_riesz_stability(const TransferChain& chain) {
    CheckResult c{"riesz-stability", "scaled-gram-conditioning"};
    const Hierarchy& h = *chain.h;
    int J = chain.finest();
    std::vector<double> kappa_scaled, kappa_raw;
    double dmin = 1e300, dmax = 0;
    ordered_json levels = ordered_json::array();
    for (int j = 0; j <= J; ++j) {
        const SparseMatrix& M = chain.sys[(size_t)j].M;
        if (M.n == 0) {
            kappa_scaled.push_back(1);
            kappa_raw.push_back(1);
            continue;
        }
        ScaledBasisExponents se = scaled_exponents(h, j);
        std::vector<double> D((size_t)M.n);
        for (int i = 0; i < M.n; ++i) D[(size_t)i] = std::pow(2.0, 1.5 * se.L[(size_t)i]);
        LinearOperator G = [&](const std::vector<double>& x) {
            std::vector<double> y(x.size());
            for (size_t i = 0; i < x.size(); ++i) y[i] = D[i] * x[i];
            y = M.apply(y);
            for (size_t i = 0; i < y.size(); ++i) y[i] *= D[i];
            return y;
        };
        auto diag = M.diagonal();
        for (int i = 0; i < M.n; ++i) {
            double g = D[(size_t)i] * D[(size_t)i] * diag[(size_t)i];
            dmin = std::min(dmin, g);
            dmax = std::max(dmax, g);
        }
        auto [smin, smax] = extreme_eigs(G, M.n, std::min(M.n, 120));
        auto [rmin, rmax] = extreme_eigs(
            [&](const std::vector<double>& x) { return M.apply(x); }, M.n,
            std::min(M.n, 120));
        kappa_scaled.push_back(smin > 0 ? smax / smin : 1);
        kappa_raw.push_back(rmin > 0 ? rmax / rmin : 1);
        ordered_json row;
        row["level"] = j;
        row["kappa_scaled"] = kappa_scaled.back();
        row["kappa_unscaled"] = kappa_raw.back();
        levels.push_back(row);
    }
    c.constants["levels"] = levels;
    c.constants["diag_min"] = dmin;
    c.constants["diag_max"] = dmax;
    if (kappa_scaled.size() >= 2) {
        size_t j = kappa_scaled.size() - 1;
        if (kappa_scaled[j - 1] > 1 && kappa_scaled[j] > 2.0 * kappa_scaled[j - 1])
            c.fail("scaled Gram conditioning doubled between the last two levels");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Sample generation shared by the spectral checks: random coefficients,
// prolongated coarse hats, and interpolants of smooth functions.

inline std::vector<std::vector<double>> sample_functions(const TransferChain& chain,
                                                         int top, int count, Rng& rng) {
    const Hierarchy& h = *chain.h;
    const MeshLevel& lv = h.level(top);
    int n = lv.dof();
    std::vector<std::vector<double>> out;
    if (n == 0) return out;

    auto smooth = [&](auto&& f) {
        std::vector<double> u((size_t)n);
        for (int i = 0; i < n; ++i)
            u[(size_t)i] = f(h.vertices[(size_t)lv.interior_nodes[(size_t)i]].coords);
        out.push_back(std::move(u));
    };
    smooth([](const Vec3& p) {
        return std::sin(3.14159265358979324 * p.x) * std::sin(3.14159265358979324 * p.y) *
               std::sin(3.14159265358979324 * p.z);
    });
    smooth([](const Vec3& p) {
        return p.x * (1 - p.x) * p.y * (1 - p.y) * p.z * (1 - p.z);
    });
    smooth([](const Vec3& p) { return p.x + 2 * p.y - p.z; });

    // prolongated coarse hats
    for (int j = 0; j < top && (int)out.size() < count; ++j) {
        int m = chain.sys[(size_t)j].M.n;
        for (int i = 0; i < m && (int)out.size() < count; i += std::max(1, m / 4)) {
            std::vector<double> e((size_t)m, 0.0);
            e[(size_t)i] = 1.0;
            out.push_back(chain.prolong_to(j, top, e));
        }
    }
    while ((int)out.size() < count) out.push_back(rng.normal_vector((size_t)n));
    return out;
}

// ---------------------------------------------------------------------------
// Norm equivalence of weighted slice decompositions

inline CheckResult check_norm_equivalence(const TransferChain& chain, int samples,
                                          const std::vector<double>& gammas,
                                          uint64_t seed = 2026) {
    CheckResult c{"norm-equivalence", "weighted-slice-sum-vs-h1"};
    int J = chain.finest();
    Rng rng(seed);

    auto weighted_sum = [&](const std::vector<std::vector<double>>& slices, int top) {
        double s = 0;
        for (int j = 0; j <= top; ++j) {
            if (chain.sys[(size_t)j].M.n == 0) continue;
            double nj = l2_norm(chain.sys[(size_t)j].M, slices[(size_t)j]);
            s += std::pow(4.0, j) * nj * nj;
        }
        return s;
    };

    // sub-chain slice computation with top level t
    auto slices_exact = [&](const std::vector<double>& u, int t) {
        std::vector<std::vector<double>> q((size_t)t + 1);
        q[(size_t)t] = u;
        for (int j = t - 1; j >= 0; --j) q[(size_t)j] = l2_project(chain, u, t, j);
        std::vector<std::vector<double>> s((size_t)t + 1);
        s[0] = q[0];
        for (int j = 1; j <= t; ++j) {
            std::vector<double> v = q[(size_t)j];
            std::vector<double> pc = chain.P[(size_t)j - 1].apply(q[(size_t)j - 1]);
            for (size_t i = 0; i < v.size(); ++i) v[i] -= pc[i];
            s[(size_t)j] = std::move(v);
        }
        return s;
    };
    auto slices_tilde = [&](const std::vector<double>& u, int t, double gamma) {
        std::vector<std::vector<double>> v((size_t)t + 1);
        v[(size_t)t] = u;
        for (int j = t - 1; j >= 0; --j) {
            const std::vector<double>& fine = v[(size_t)j + 1];
            std::vector<double> coarse = nodal_restrict(*chain.h, j, fine);
            std::vector<double> osc = fine;
            std::vector<double> pc = chain.P[(size_t)j].apply(coarse);
            for (size_t i = 0; i < osc.size(); ++i) osc[i] -= pc[i];
            std::vector<double> qa = approx_project(chain, osc, j, gamma);
            for (size_t i = 0; i < coarse.size(); ++i) coarse[i] += qa[i];
            v[(size_t)j] = std::move(coarse);
        }
        std::vector<std::vector<double>> s((size_t)t + 1);
        s[0] = v[0];
        for (int j = 1; j <= t; ++j) {
            std::vector<double> w = v[(size_t)j];
            std::vector<double> pc = chain.P[(size_t)j - 1].apply(v[(size_t)j - 1]);
            for (size_t i = 0; i < w.size(); ++i) w[i] -= pc[i];
            s[(size_t)j] = std::move(w);
        }
        return s;
    };

    ordered_json table = ordered_json::array();
    // spread[t][variant index]: variants = exact, then one per gamma
    std::vector<std::vector<double>> spread((size_t)J + 1);
    std::vector<std::vector<double>> pert_c((size_t)J + 1);
    for (int t = std::max(1, J - 1); t <= J; ++t) {
        auto us = sample_functions(chain, t, samples, rng);
        std::vector<double> rmin(1 + gammas.size(), 1e300), rmax(1 + gammas.size(), 0.0);
        double cmax = 0;
        double max_gap_at_zero = 0;
        for (const auto& u : us) {
            double h1 = h1_norm(chain.sys[(size_t)t].H, u);
            if (h1 <= 0) continue;
            auto se = slices_exact(u, t);
            double base = weighted_sum(se, t);
            rmin[0] = std::min(rmin[0], base / (h1 * h1));
            rmax[0] = std::max(rmax[0], base / (h1 * h1));
            for (size_t gi = 0; gi < gammas.size(); ++gi) {
                auto st = slices_tilde(u, t, gammas[gi]);
                double ws = weighted_sum(st, t);
                rmin[gi + 1] = std::min(rmin[gi + 1], ws / (h1 * h1));
                rmax[gi + 1] = std::max(rmax[gi + 1], ws / (h1 * h1));
                if (gammas[gi] == 0) {
                    max_gap_at_zero =
                        std::max(max_gap_at_zero, std::abs(ws - base) / std::max(base, 1e-300));
                } else {
                    // perturbation constant for the error slices
                    double err = 0;
                    for (int j = 0; j <= t; ++j) {
                        std::vector<double> e = st[(size_t)j];
                        for (size_t i = 0; i < e.size(); ++i) e[i] -= se[(size_t)j][i];
                        if (chain.sys[(size_t)j].M.n == 0) continue;
                        double nj = l2_norm(chain.sys[(size_t)j].M, e);
                        err += std::pow(4.0, j) * nj * nj;
                    }
                    if (base > 0)
                        cmax = std::max(cmax, err / (gammas[gi] * gammas[gi] * base));
                }
            }
        }
        for (size_t v = 0; v < rmin.size(); ++v)
            spread[(size_t)t].push_back(rmin[v] > 0 ? rmax[v] / rmin[v] : 0);
        pert_c[(size_t)t].push_back(cmax);
        ordered_json row;
        row["top_level"] = t;
        row["spread_exact"] = spread[(size_t)t][0];
        for (size_t gi = 0; gi < gammas.size(); ++gi)
            row["spread_gamma_" + detail::fmt(gammas[gi])] = spread[(size_t)t][gi + 1];
        row["perturbation_c"] = cmax;
        row["max_rel_gap_gamma0"] = max_gap_at_zero;
        table.push_back(row);
        if (max_gap_at_zero > 1e-8)
            c.fail("inexact slices differ from exact ones at zero slack: gap " +
                   detail::fmt(max_gap_at_zero));
    }
    c.constants["table"] = table;
    // The growth assertion compares sampled extremes, which are only comparable
    // between levels of similar dimension; under global (quasi-uniform) growth
    // the measured constants are still saturating at desk scale.
    bool comparable = J >= 3 && chain.sys[(size_t)J - 1].M.n > 0 &&
                      chain.sys[(size_t)J].M.n <= 4 * chain.sys[(size_t)J - 1].M.n;
    c.constants["growth_asserted"] = comparable;
    if (comparable) {
        for (size_t v = 0; v < spread[(size_t)J].size(); ++v) {
            double sJ = spread[(size_t)J][v], sP = spread[(size_t)J - 1][v];
            if (sP > 0 && sJ > 1.15 * sP)
                c.fail("slice-sum spread grew by " + detail::fmt(sJ / sP) +
                       " at the finest level (variant " + std::to_string(v) + ")");
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// H1-stability of the (approximate) L2-projections

inline CheckResult check_h1_stability(const TransferChain& chain, int samples,
                                      double gamma = 0.0, uint64_t seed = 4711) {
    CheckResult c{"h1-stability", "projection-h1-bounded"};
    int J = chain.finest();
    Rng rng(seed);
    std::vector<double> maxratio((size_t)J + 1, 0.0);
    for (int t = std::max(1, J - 1); t <= J; ++t) {
        auto us = sample_functions(chain, t, samples, rng);
        for (const auto& u : us) {
            double h1 = h1_norm(chain.sys[(size_t)t].H, u);
            if (h1 <= 0) continue;
            std::vector<double> v = u;
            for (int j = t - 1; j >= 0; --j) {
                std::vector<double> coarse = nodal_restrict(*chain.h, j, v);
                std::vector<double> osc = v;
                std::vector<double> pc = chain.P[(size_t)j].apply(coarse);
                for (size_t i = 0; i < osc.size(); ++i) osc[i] -= pc[i];
                std::vector<double> qa = approx_project(chain, osc, j, gamma);
                for (size_t i = 0; i < coarse.size(); ++i) coarse[i] += qa[i];
                v = std::move(coarse);
                if (chain.sys[(size_t)j].H.n == 0) continue;
                double hj = h1_norm(chain.sys[(size_t)j].H, v);
                maxratio[(size_t)t] = std::max(maxratio[(size_t)t], hj / h1);
            }
        }
    }
    c.constants["max_ratio_finest"] = maxratio[(size_t)J];
    if (J >= 2) {
        c.constants["max_ratio_previous"] = maxratio[(size_t)J - 1];
        if (maxratio[(size_t)J - 1] > 0 &&
            maxratio[(size_t)J] > 1.15 * maxratio[(size_t)J - 1])
            c.fail("projection H1 ratio grew by " +
                   detail::fmt(maxratio[(size_t)J] / maxratio[(size_t)J - 1]));
    }
    return c;
}

// ---------------------------------------------------------------------------
// Conditioning of the fine-fine block in the wavelet-modified splitting

struct AffSpectrum {
    int level = 0;
    double lambda_min = 0, lambda_max = 0, kappa = 1;
    int dim = 0;
};

inline AffSpectrum aff_spectrum(const TransferChain& chain, int j) {
    const Hierarchy& h = *chain.h;
    const MeshLevel& lv = h.level(j);
    std::vector<int> fresh = fresh_nodes(h, j);
    AffSpectrum s;
    s.level = j;
    s.dim = (int)fresh.size();
    if (fresh.empty()) return s;
    // slice basis (I - Q_{j-1}) hat_i at zero slack, expressed on level j; each
    // basis function carries its 2^{(3/2)L} scale so the spectrum grows by 4x
    // per level instead of shrinking with the mesh size
    ScaledBasisExponents se = scaled_exponents(h, j);
    std::vector<std::vector<double>> basis;
    basis.reserve(fresh.size());
    for (int vid : fresh) {
        std::vector<double> e((size_t)lv.dof(), 0.0);
        e[(size_t)lv.interior_index.at(vid)] = 1.0;
        if (j > 0 && chain.sys[(size_t)j - 1].M.n > 0) {
            std::vector<double> q = approx_project(chain, e, j - 1, 0.0);
            std::vector<double> pq = chain.P[(size_t)j - 1].apply(q);
            for (size_t i = 0; i < e.size(); ++i) e[i] -= pq[i];
        }
        double scale =
            std::pow(2.0, 1.5 * se.L[(size_t)lv.interior_index.at(vid)]);
        for (auto& x : e) x *= scale;
        basis.push_back(std::move(e));
    }
    const SparseMatrix& A = chain.sys[(size_t)j].A;
    int m = (int)basis.size();
    Eigen::MatrixXd Aff(m, m);
    for (int a = 0; a < m; ++a) {
        std::vector<double> Ab = A.apply(basis[(size_t)a]);
        for (int b = 0; b < m; ++b) Aff(a, b) = dot(basis[(size_t)b], Ab);
    }
    Aff = 0.5 * (Aff + Aff.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Aff, Eigen::EigenvaluesOnly);
    s.lambda_min = es.eigenvalues()(0);
    s.lambda_max = es.eigenvalues()(m - 1);
    s.kappa = s.lambda_min > 0 ? s.lambda_max / s.lambda_min : 0;
    return s;
}

inline CheckResult check_aff_conditioning(const TransferChain& chain) {
    CheckResult c{"fine-fine-conditioning", "slice-stiffness-scales-4x"};
    int J = chain.finest();
    ordered_json rows = ordered_json::array();
    std::vector<AffSpectrum> spectra;
    for (int j = 1; j <= J; ++j) {
        AffSpectrum s = aff_spectrum(chain, j);
        spectra.push_back(s);
        ordered_json row;
        row["level"] = s.level;
        row["dim"] = s.dim;
        row["lambda_min"] = s.lambda_min;
        row["lambda_max"] = s.lambda_max;
        row["kappa"] = s.kappa;
        rows.push_back(row);
    }
    c.constants["levels"] = rows;
    for (size_t k = 1; k < spectra.size(); ++k) {
        const AffSpectrum& prev = spectra[k - 1];
        const AffSpectrum& cur = spectra[k];
        if (prev.dim == 0 || cur.dim == 0) continue;
        if (cur.level >= 3 && prev.kappa > 0 &&
            (cur.kappa > 2.0 * prev.kappa || prev.kappa > 2.0 * cur.kappa))
            c.fail("fine-fine conditioning jumped between levels " +
                   std::to_string(prev.level) + " and " + std::to_string(cur.level));
        if (prev.dim > 1 && cur.dim > 1) {
            double r = cur.lambda_max / prev.lambda_max;
            if (r < 2.0 || r > 8.0)
                c.fail("largest eigenvalue ratio " + detail::fmt(r) + " outside [2,8] at level " +
                       std::to_string(cur.level));
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Full suite

struct VerifyOptions {
    int samples = 50;
    std::vector<double> gammas = {0.0, 0.02, 0.1};
    uint64_t seed = 2026;
    bool spectral = true;  // include the chain-based checks
};

inline VerifyReport run_verification(const Hierarchy& h, const TransferChain* chain,
                                     const VerifyOptions& opt) {
    VerifyReport rep;
    rep.seed = opt.seed;
    for (auto& c : check_assumptions(h)) rep.checks.push_back(std::move(c));
    rep.checks.push_back(check_generation_bounds(h));
    rep.checks.push_back(check_patch_quasiuniformity(h));
    rep.checks.push_back(check_smoothing_bound(h));
    if (chain && opt.spectral) {
        rep.checks.push_back(check_riesz_stability(*chain));
        rep.checks.push_back(check_norm_equivalence(*chain, opt.samples, opt.gammas, opt.seed));
        rep.checks.push_back(check_h1_stability(*chain, opt.samples, 0.0, opt.seed + 1));
        rep.checks.push_back(check_aff_conditioning(*chain));
    }
    return rep;
}

} // namespace tetml

#endif
