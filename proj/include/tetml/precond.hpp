#ifndef TETML_PRECOND_HPP
#define TETML_PRECOND_HPP

#include <memory>
#include <unordered_set>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "tetml/transfer.hpp"

namespace tetml {

// Nodes smoothed at level j: interior nodes born at level j plus older interior
// nodes whose nodal basis function changed. A hat function changes exactly when
// an edge incident to its node is bisected; refining a far edge of a star tet
// leaves the hat untouched as a function. Level 0 returns all interior nodes.
struct SmoothingSet {
    int level = 0;
    std::vector<int> nodes;  // vertex ids, ascending
};

inline SmoothingSet smoothing_set(const Hierarchy& h, int j) {
    SmoothingSet s;
    s.level = j;
    const MeshLevel& lv = h.level(j);
    if (j == 0) {
        s.nodes = lv.interior_nodes;
        return s;
    }
    std::unordered_set<int> set;
    for (const Vertex& v : h.vertices)
        if (v.birth_level == j) {
            set.insert(v.id);
            set.insert(v.parent_edge[0]);
            set.insert(v.parent_edge[1]);
        }
    for (int vid : lv.interior_nodes)
        if (set.count(vid)) s.nodes.push_back(vid);
    return s;
}

// Strictly new interior nodes N_j^f (all interior nodes at level 0).
inline std::vector<int> fresh_nodes(const Hierarchy& h, int j) {
    std::vector<int> out;
    for (int vid : h.level(j).interior_nodes)
        if (j == 0 || h.vertices[(size_t)vid].birth_level == j) out.push_back(vid);
    return out;
}

enum class PrecondKind { HB, BPX, WHB };

enum class BffMode { ScaledIdentity, Jacobi };

struct PrecondConfig {
    PrecondKind kind = PrecondKind::BPX;
    double gamma = 0.0;            // inner-solve slack for the WHB basis
    BffMode bff = BffMode::ScaledIdentity;
};

// Additive multilevel preconditioner acting on residuals of the finest-level
// interior system: exact coarse solve plus per-level diagonal smoothing (HB,
// BPX) or wavelet outer products (WHB).
class Preconditioner {
public:
    Preconditioner(const TransferChain& chain, PrecondConfig cfg)
        : c_(&chain), cfg_(cfg) {
        const Hierarchy& h = *chain.h;
        int J = chain.finest();
        masks_.resize((size_t)J + 1);
        for (int j = 0; j <= J; ++j) {
            const MeshLevel& lv = h.level(j);
            std::vector<int> nodes = cfg.kind == PrecondKind::HB
                                         ? fresh_nodes(h, j)
                                         : smoothing_set(h, j).nodes;
            std::vector<char> mask((size_t)lv.dof(), 0);
            for (int vid : nodes) mask[(size_t)lv.interior_index.at(vid)] = 1;
            masks_[(size_t)j] = std::move(mask);
        }
        // exact coarse solve (dense Cholesky); trivial when the coarse grid has
        // no interior nodes
        int n0 = chain.sys[0].A.n;
        if (n0 > 0) {
            Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(n0, n0);
            const SparseMatrix& A = chain.sys[0].A;
            for (int i = 0; i < n0; ++i)
                for (int k = A.row_ptr[(size_t)i]; k < A.row_ptr[(size_t)i + 1]; ++k)
                    A0(i, A.col[(size_t)k]) = A.val[(size_t)k];
            coarse_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(A0);
            if (coarse_->info() != Eigen::Success)
                throw SolverStall("coarse matrix not positive definite");
        }
        if (cfg.kind == PrecondKind::WHB) build_wavelets();
    }

    std::vector<double> apply(const std::vector<double>& r) const {
        int J = c_->finest();
        if ((int)r.size() != c_->sys[(size_t)J].A.n)
            throw DimensionMismatch("preconditioner: residual size mismatch");
        // residual restrictions r_j = P_j^T ... P_{J-1}^T r
        std::vector<std::vector<double>> rj((size_t)J + 1);
        rj[(size_t)J] = r;
        for (int j = J; j > 0; --j)
            rj[(size_t)j - 1] =
                restrict_dual(c_->P[(size_t)j - 1], rj[(size_t)j], c_->sys[(size_t)j - 1].A.n);

        std::vector<double> z = coarse_term(rj[0]);
        for (int j = 1; j <= J; ++j) {
            z = c_->P[(size_t)j - 1].apply(z);
            std::vector<double> term = cfg_.kind == PrecondKind::WHB
                                           ? wavelet_term(j, rj[(size_t)j])
                                           : diagonal_term(j, rj[(size_t)j]);
            for (size_t i = 0; i < z.size(); ++i) z[i] += term[i];
        }
        return z;
    }

    LinearOperator as_operator() const {
        return [this](const std::vector<double>& r) { return apply(r); };
    }

private:
    std::vector<double> coarse_term(const std::vector<double>& r0) const {
        if (!coarse_) return std::vector<double>(r0.size(), 0.0);
        Eigen::VectorXd b((int)r0.size());
        for (size_t i = 0; i < r0.size(); ++i) b[(int)i] = r0[i];
        Eigen::VectorXd x = coarse_->solve(b);
        std::vector<double> out(r0.size());
        for (size_t i = 0; i < out.size(); ++i) out[i] = x[(int)i];
        return out;
    }

    // 2^{j(d-2)} chi_j r_j with d = 3; the coarse level is handled exactly, so
    // level 0 only contributes through coarse_term.
    std::vector<double> diagonal_term(int j, const std::vector<double>& rjv) const {
        std::vector<double> out(rjv.size(), 0.0);
        if (j == 0) return out;
        double scale = std::pow(2.0, j);
        const auto& mask = masks_[(size_t)j];
        for (size_t i = 0; i < rjv.size(); ++i)
            if (mask[i]) out[i] = scale * rjv[i];
        return out;
    }

    void build_wavelets() {
        const Hierarchy& h = *c_->h;
        int J = c_->finest();
        psi_.resize((size_t)J + 1);
        jacobi_.resize((size_t)J + 1);
        for (int j = 1; j <= J; ++j) {
            const MeshLevel& lv = h.level(j);
            std::vector<int> fresh = fresh_nodes(h, j);
            auto& Psi = psi_[(size_t)j];
            Psi.reserve(fresh.size());
            for (int vid : fresh) {
                // psi = (I - Q^a_{j-1}) hat_i, with the hat of a fresh node
                // vanishing at all coarse nodes
                std::vector<double> e((size_t)lv.dof(), 0.0);
                e[(size_t)lv.interior_index.at(vid)] = 1.0;
                std::vector<double> q = approx_project(*c_, e, j - 1, cfg_.gamma);
                std::vector<double> pq = c_->P[(size_t)j - 1].apply(q);
                for (size_t i = 0; i < e.size(); ++i) e[i] -= pq[i];
                Psi.push_back(std::move(e));
            }
            if (cfg_.bff == BffMode::Jacobi) {
                auto& d = jacobi_[(size_t)j];
                d.reserve(Psi.size());
                const SparseMatrix& A = c_->sys[(size_t)j].A;
                for (const auto& p : Psi) d.push_back(dot(p, A.apply(p)));
            }
        }
    }

    std::vector<double> wavelet_term(int j, const std::vector<double>& rjv) const {
        std::vector<double> out(rjv.size(), 0.0);
        if (j == 0) return out;
        const auto& Psi = psi_[(size_t)j];
        double scale = std::pow(2.0, j);
        for (size_t i = 0; i < Psi.size(); ++i) {
            double ccoef = dot(Psi[i], rjv);
            if (cfg_.bff == BffMode::Jacobi) {
                double d = jacobi_[(size_t)j][i];
                if (d <= 0) throw SolverStall("nonpositive wavelet diagonal");
                ccoef /= d;
            } else {
                ccoef *= scale;
            }
            axpy(ccoef, Psi[i], out);
        }
        return out;
    }

    const TransferChain* c_;
    PrecondConfig cfg_;
    std::vector<std::vector<char>> masks_;
    std::shared_ptr<Eigen::LLT<Eigen::MatrixXd>> coarse_;
    std::vector<std::vector<std::vector<double>>> psi_;  // per level, per fresh node
    std::vector<std::vector<double>> jacobi_;
};

} // namespace tetml

#endif
