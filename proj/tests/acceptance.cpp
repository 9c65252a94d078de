// End-to-end acceptance gate: one pass/fail line per criterion, nonzero exit
// if any criterion fails. argv[1] is the path to the command-line driver
// (used by the determinism criterion).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tetml/io.hpp"
#include "tetml/precond.hpp"
#include "tetml/solver.hpp"
#include "tetml/verify.hpp"

namespace fs = std::filesystem;
using namespace tetml;

namespace {

int g_failures = 0;

void criterion(int n, bool ok, const std::string& what, const std::string& detail = "") {
    std::printf("criterion %2d: %s  %s%s%s\n", n, ok ? "pass" : "FAIL", what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Hierarchy build_octahedron() {
    std::istringstream in(
        "7 8\n"
        "0 0 0\n"
        "1 0 0\n-1 0 0\n0 1 0\n0 -1 0\n0 0 1\n0 0 -1\n"
        "0 1 3 5\n0 3 2 5\n0 2 4 5\n0 4 1 5\n"
        "0 3 1 6\n0 2 3 6\n0 4 2 6\n0 1 4 6\n");
    return build_from_stream(in);
}

std::array<Vec3, 4> random_tet(Rng& rng) {
    for (;;) {
        std::array<Vec3, 4> v;
        for (auto& p : v) p = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double vol = tet_volume(v);
        if (std::abs(vol) < 1e-3) continue;
        if (vol < 0) std::swap(v[2], v[3]);
        return v;
    }
}

double solve_kappa(const TransferChain& chain, PrecondKind kind, double gamma) {
    PrecondConfig cfg;
    cfg.kind = kind;
    cfg.gamma = gamma;
    Preconditioner pc(chain, cfg);
    int J = chain.finest();
    auto [lmin, lmax] =
        preconditioned_extremes(chain.sys[(size_t)J].A, pc.as_operator(),
                                std::min(chain.sys[(size_t)J].A.n, 200));
    return lmin > 0 ? lmax / lmin : 0;
}

} // namespace

int main(int argc, char** argv) {
    std::string cli = argc > 1 ? argv[1] : "";

    // shared hierarchies and transfer chains reused by several criteria
    std::map<std::pair<int, int>, Hierarchy> hs;  // (scenario, J) -> hierarchy
    const Scenario scens[3] = {Scenario::Uniform, Scenario::Corner, Scenario::Ball};
    for (int s = 0; s < 3; ++s)
        for (int J = 1; J <= 4; ++J) hs.emplace(std::make_pair(s, J), build_scenario(scens[s], J));

    // ---------------------------------------------------------------- 1
    {
        bool ok = true;
        std::string detail;
        for (auto& [key, h] : hs)
            for (const CheckResult& c : check_assumptions(h))
                if (!c.pass) {
                    ok = false;
                    detail = scenario_name(scens[key.first]) + " J=" +
                             std::to_string(key.second) + " " + c.check;
                }
        {
            Hierarchy h = build_reference_simplex();
            auto kids = red_refine(h, 0, 0);
            for (int k : kids)
                if (std::abs(h.tet_vol(k) - 1.0 / 48.0) > 1e-13 / 48.0) ok = false;
        }
        for (std::vector<int> edges : {std::vector<int>{0}, {0, 3}, {0, 5}, {0, 1, 3}}) {
            Hierarchy h = build_reference_simplex();
            EdgeMarkMap m;
            m.level = 0;
            for (int e : edges)
                m.marked.insert(edge_key(h.tets[0].verts[kTetEdges[e][0]],
                                         h.tets[0].verts[kTetEdges[e][1]]));
            green_refine(h, 0, m, 0);
            double vc = 0;
            for (int c : h.tets[0].children) vc += h.tet_vol(c);
            if (std::abs(vc - 1.0 / 6.0) > 1e-13 / 6.0) ok = false;
        }
        criterion(1, ok, "refinement correctness on all scenarios and subdivision volumes",
                  detail);
    }

    // ---------------------------------------------------------------- 2
    {
        bool ok = true;
        std::string detail;
        for (auto& [key, h] : hs) {
            GenerationBounds g = generation_bounds(h);
            if (g.face > 1) {
                ok = false;
                detail = "face difference " + std::to_string(g.face);
            }
            if (key.second == 4) {
                if (g.edge_prefix[4] != g.edge_prefix[3] ||
                    g.vertex_prefix[4] != g.vertex_prefix[3]) {
                    ok = false;
                    detail = scenario_name(scens[key.first]) + " adjacency bounds not settled";
                }
            }
        }
        criterion(2, ok, "face-adjacent level difference <= 1, edge/vertex bounds settled",
                  detail);
    }

    // ---------------------------------------------------------------- 3
    {
        bool ok = true;
        std::string detail;
        for (auto& [key, h] : hs) {
            long sum = 0;
            int J = h.max_level();
            for (int j = 0; j <= J; ++j) sum += (long)smoothing_set(h, j).nodes.size();
            long NJ = h.level(J).dof(), N0 = h.level(0).dof();
            if (3 * sum > 5 * NJ - 2 * N0) {
                ok = false;
                detail = scenario_name(scens[key.first]) + " J=" + std::to_string(key.second);
            }
        }
        {
            Hierarchy h = build_octahedron();  // single level with one interior node
            long sum = (long)smoothing_set(h, 0).nodes.size();
            long N = h.level(0).dof();
            if (3 * sum != 5 * N - 2 * N) {
                ok = false;
                detail = "no equality at a single level";
            }
        }
        criterion(3, ok, "smoothing-node total within the 5/3 counting bound", detail);
    }

    // ---------------------------------------------------------------- 4
    {
        Rng rng(2026);
        bool ok = true;
        double worst = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            auto v = random_tet(rng);
            std::array<double, 4> vals;
            for (auto& x : vals) x = rng.uniform(-3, 3);
            double closed = l2_norm_linear(vals, v);
            double quad = std::sqrt(std::max(
                0.0, oracle::integrate_tet(v, [&](const Vec3& p) {
                    auto lam = barycentric(v, p);
                    double g = 0;
                    for (int a = 0; a < 4; ++a) g += vals[(size_t)a] * lam[(size_t)a];
                    return g * g;
                })));
            double rel = std::abs(closed - quad) / std::max(quad, 1e-300);
            worst = std::max(worst, rel);
            if (rel > 1e-12) ok = false;
            double n1 = l2_norm_linear({1, 1, 1, 1}, v);
            double vol = std::abs(tet_volume(v));
            if (std::abs(n1 * n1 - vol) > 1e-13 * vol) ok = false;
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "max rel err %.2e", worst);
        criterion(4, ok, "closed-form elementwise L2 norm vs quadrature, 1000 samples", buf);
    }

    // ---------------------------------------------------------------- 5
    Hierarchy corner5 = build_scenario(Scenario::Corner, 5);
    {
        TransferChain chain = build_transfer(corner5, Coefficients::h1());
        auto gram_kappas = [&](int j) {
            const SparseMatrix& M = chain.sys[(size_t)j].M;
            ScaledBasisExponents se = scaled_exponents(corner5, j);
            std::vector<double> D((size_t)M.n);
            for (int i = 0; i < M.n; ++i) D[(size_t)i] = std::pow(2.0, 1.5 * se.L[(size_t)i]);
            auto scaled = [&](const std::vector<double>& x) {
                std::vector<double> y(x.size());
                for (size_t i = 0; i < x.size(); ++i) y[i] = D[i] * x[i];
                y = M.apply(y);
                for (size_t i = 0; i < y.size(); ++i) y[i] *= D[i];
                return y;
            };
            auto [smin, smax] = extreme_eigs(scaled, M.n, M.n);
            auto [rmin, rmax] = extreme_eigs(
                [&](const std::vector<double>& x) { return M.apply(x); }, M.n, M.n);
            return std::make_pair(smax / smin, rmax / rmin);
        };
        auto [s3, r3] = gram_kappas(3);
        auto [s5, r5] = gram_kappas(5);
        bool ok = s5 <= 2.0 * s3 && s3 <= 2.0 * s5 && r5 >= 2.0 * r3;
        char buf[128];
        std::snprintf(buf, sizeof buf, "scaled %.2f->%.2f, unscaled %.1f->%.1f", s3, s5, r3,
                      r5);
        criterion(5, ok, "scaled-basis mass conditioning stays flat, unscaled degrades", buf);
    }

    // ---------------------------------------------------------------- 6
    TransferChain corner4 = build_transfer(hs.at({1, 4}), Coefficients::h1());
    {
        CheckResult c = check_norm_equivalence(corner4, 50, {0.0, 0.02});
        bool asserted = c.constants.contains("growth_asserted") &&
                        c.constants["growth_asserted"].get<bool>();
        criterion(6, c.pass && asserted,
                  "weighted slice sums comparable to the gradient norm",
                  c.pass ? "" : c.witnesses.empty() ? "" : c.witnesses.front());
    }

    // ---------------------------------------------------------------- 7
    {
        TransferChain corner3 = build_transfer(hs.at({1, 3}), Coefficients::h1());
        bool ok = true;
        std::string detail;
        char buf[160];
        for (auto kind : {PrecondKind::BPX, PrecondKind::WHB}) {
            double g = kind == PrecondKind::WHB ? 0.02 : 0.0;
            double k3 = solve_kappa(corner3, kind, g);
            double k4 = solve_kappa(corner4, kind, g);
            if (!(k4 <= 1.2 * k3)) {
                ok = false;
                std::snprintf(buf, sizeof buf, "local kappa grew %.3f -> %.3f", k3, k4);
                detail = buf;
            }
        }
        double prev_ratio = 0;
        for (int J = 1; J <= 4; ++J) {
            TransferChain chain = build_transfer(hs.at({0, J}), Coefficients::h1());
            double khb = solve_kappa(chain, PrecondKind::HB, 0.0);
            double kbpx = solve_kappa(chain, PrecondKind::BPX, 0.0);
            double ratio = khb / kbpx;
            if (ratio < prev_ratio * 0.999) {
                ok = false;
                std::snprintf(buf, sizeof buf, "ratio fell %.3f -> %.3f at J=%d", prev_ratio,
                              ratio, J);
                detail = buf;
            }
            prev_ratio = ratio;
        }
        criterion(7, ok, "additive preconditioners: local kappa flat, HB/BPX gap widening",
                  detail);
    }

    // ---------------------------------------------------------------- 8
    {
        std::vector<AffSpectrum> sp;
        for (int j = 2; j <= 4; ++j) sp.push_back(aff_spectrum(corner4, j));
        double kmin = 1e300, kmax = 0;
        bool ok = true;
        for (const AffSpectrum& s : sp) {
            kmin = std::min(kmin, s.kappa);
            kmax = std::max(kmax, s.kappa);
        }
        if (kmax > 2.0 * kmin) ok = false;
        for (size_t k = 1; k < sp.size(); ++k) {
            double r = sp[k].lambda_max / sp[k - 1].lambda_max;
            if (r < 2.0 || r > 8.0) ok = false;
        }
        char buf[128];
        std::snprintf(buf, sizeof buf, "kappa in [%.2f, %.2f]", kmin, kmax);
        criterion(8, ok, "new-degree-of-freedom stiffness block stays well conditioned", buf);
    }

    // ---------------------------------------------------------------- 9
    {
        CheckResult c = check_h1_stability(corner4, 50);
        criterion(9, c.pass, "coarse projections of fine functions keep a bounded H1 norm",
                  c.pass || c.witnesses.empty() ? "" : c.witnesses.front());
    }

    // ---------------------------------------------------------------- 10
    {
        const Hierarchy& h = hs.at({1, 2});
        bool ok = true;
        double worst = 0;
        for (int t : h.level(2).active_tets) {
            DualBasisElement d = dual_basis(h, 2, t);
            auto coords = h.tet_coords(t);
            const Tet& tet = h.tets[(size_t)t];
            for (int k = 0; k < 4; ++k) {
                int L = 2;
                for (int s : star(h, tet.verts[k], 2))
                    L = std::min(L, h.tets[(size_t)s].level);
                double scale = std::pow(2.0, 1.5 * L);
                for (int l = 0; l < 4; ++l) {
                    double q = oracle::integrate_tet(coords, [&](const Vec3& p) {
                        auto lam = barycentric(coords, p);
                        double psi = 0;
                        for (int m = 0; m < 4; ++m)
                            psi += d.psi[(size_t)l][(size_t)m] * lam[(size_t)m];
                        return scale * lam[(size_t)k] * psi;
                    });
                    double err = std::abs(q - (k == l ? 1.0 : 0.0));
                    worst = std::max(worst, err);
                    if (err > 1e-10) ok = false;
                }
            }
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "max deviation %.2e", worst);
        criterion(10, ok, "element dual basis biorthogonal on every tet", buf);
    }

    // ---------------------------------------------------------------- 11
    {
        auto exact = [](const Vec3& p) {
            return p.x * (1 - p.x) * p.y * (1 - p.y) * p.z * (1 - p.z);
        };
        auto rhs = [](const Vec3& p) {
            return 2 * (p.y * (1 - p.y) * p.z * (1 - p.z) +
                        p.x * (1 - p.x) * p.z * (1 - p.z) +
                        p.x * (1 - p.x) * p.y * (1 - p.y));
        };
        std::vector<double> errs;
        Hierarchy uniform5 = build_scenario(Scenario::Uniform, 5);
        for (int J = 3; J <= 5; ++J) {
            const Hierarchy& h = J == 5 ? uniform5 : hs.at({0, J});
            TransferChain chain = build_transfer(h, Coefficients::poisson(rhs));
            PrecondConfig cfg;
            cfg.kind = PrecondKind::BPX;
            Preconditioner pc(chain, cfg);
            auto [x, rep] =
                pcg(chain.sys[(size_t)J].A, chain.sys[(size_t)J].F, pc.as_operator(), 1e-12,
                    2000);
            // true L2 error by quadrature over the finest partition
            const MeshLevel& lv = h.level(J);
            double err2 = 0;
            for (int t : lv.active_tets) {
                auto coords = h.tet_coords(t);
                std::array<double, 4> vals{};
                for (int k = 0; k < 4; ++k) {
                    auto it = lv.interior_index.find(h.tets[(size_t)t].verts[k]);
                    vals[(size_t)k] = it == lv.interior_index.end() ? 0.0
                                                                    : x[(size_t)it->second];
                }
                err2 += oracle::integrate_tet(coords, [&](const Vec3& p) {
                    auto lam = barycentric(coords, p);
                    double uh = 0;
                    for (int k = 0; k < 4; ++k) uh += vals[(size_t)k] * lam[(size_t)k];
                    double d = uh - exact(p);
                    return d * d;
                });
            }
            errs.push_back(std::sqrt(err2));
        }
        bool ok = true;
        char buf[128];
        std::string detail;
        for (size_t k = 1; k < errs.size(); ++k) {
            double r = errs[k - 1] / errs[k];
            if (r < 3.5 || r > 4.5) ok = false;
            std::snprintf(buf, sizeof buf, "error ratios %.2f", r);
            detail += std::string(detail.empty() ? "" : ", ") + buf;
        }
        // dense spectral oracle for a small two-level preconditioned operator
        {
            TransferChain chain = build_transfer(hs.at({0, 2}), Coefficients::h1());
            PrecondConfig cfg;
            cfg.kind = PrecondKind::BPX;
            Preconditioner pc(chain, cfg);
            const SparseMatrix& A = chain.sys[2].A;
            int n = A.n;
            auto [lmin, lmax] = preconditioned_extremes(A, pc.as_operator(), n);
            Eigen::MatrixXd Ad = oracle::to_dense(A), Xd(n, n);
            for (int i = 0; i < n; ++i) {
                std::vector<double> e((size_t)n, 0.0);
                e[(size_t)i] = 1.0;
                std::vector<double> col = pc.apply(e);
                for (int r = 0; r < n; ++r) Xd(r, i) = col[(size_t)r];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esA(Ad);
            Eigen::MatrixXd Ah = esA.operatorSqrt();
            Eigen::MatrixXd S = Ah * Xd * Ah;
            S = 0.5 * (S + S.transpose().eval());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
            if (std::abs(lmin - es.eigenvalues()(0)) > 1e-6 * std::abs(es.eigenvalues()(0)))
                ok = false;
            if (std::abs(lmax - es.eigenvalues()(n - 1)) >
                1e-6 * std::abs(es.eigenvalues()(n - 1)))
                ok = false;
        }
        criterion(11, ok, "quadratic convergence of the model solve, spectra match dense oracle",
                  detail);
    }

    // ---------------------------------------------------------------- 12
    {
        bool ok = !cli.empty();
        std::string detail = ok ? "" : "driver path not supplied";
        if (ok) {
            fs::path tmp = fs::temp_directory_path() / "accept12";
            fs::remove_all(tmp);
            fs::create_directories(tmp);
            auto shell = [&](const std::string& cmd) { return std::system(cmd.c_str()); };
            std::string base = "\"" + cli +
                               "\" run --scenario corner --J 4 --precond whb --gamma 0.02 "
                               "--seed 7 --out ";
            shell(base + (tmp / "a").string() + " > /dev/null");
            shell(base + (tmp / "b").string() + " > /dev/null");
            for (const char* f : {"solve.json", "verify.json"}) {
                std::string sa = read_file(tmp / "a" / f), sb = read_file(tmp / "b" / f);
                if (sa.empty() || sa != sb) {
                    ok = false;
                    detail = std::string(f) + " differs or is empty";
                }
            }
            std::string cmp = "\"" + cli +
                              "\" compare --scenario corner --J 3 --precond hb,bpx,whb "
                              "--gammas 0.02 --seed 7 --out ";
            shell(cmp + (tmp / "c").string() + " > /dev/null");
            shell(cmp + (tmp / "d").string() + " > /dev/null");
            std::string ca = read_file(tmp / "c" / "compare.csv");
            std::string cb = read_file(tmp / "d" / "compare.csv");
            if (ca.empty() || ca != cb) {
                ok = false;
                detail = "compare.csv differs or is empty";
            }
        }
        criterion(12, ok, "byte-identical reports for identical configuration and seed",
                  detail);
    }

    if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
