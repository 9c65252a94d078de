#ifndef TETML_SOLVER_HPP
#define TETML_SOLVER_HPP

#include <chrono>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tetml/rng.hpp"
#include "tetml/sparse.hpp"

namespace tetml {

using LinearOperator = std::function<std::vector<double>(const std::vector<double>&)>;

struct SolveReport {
    int iterations = 0;
    bool converged = false;
    double relative_residual = 0;       // preconditioned-residual norm ratio
    double true_relative_residual = 0;  // plain residual norm ratio
    double lambda_min = 0, lambda_max = 0, kappa = 0;
    double wall_seconds = 0;
    std::vector<double> anorm_error_estimates;  // Hestenes-Stiefel tail sums
};

namespace detail {

inline std::pair<double, double> tridiag_extremes(const std::vector<double>& diag,
                                                  const std::vector<double>& offdiag) {
    int k = (int)diag.size();
    if (k == 0) return {0, 0};
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
        T(i, i) = diag[(size_t)i];
        if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = offdiag[(size_t)i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    return {es.eigenvalues()(0), es.eigenvalues()(k - 1)};
}

} // namespace detail

// Preconditioned conjugate gradients with eigenvalue estimation of the
// preconditioned operator from the CG scalars (Lanczos tridiagonal).
// precond == nullptr means identity.
inline std::pair<std::vector<double>, SolveReport> pcg(const SparseMatrix& A,
                                                       const std::vector<double>& b,
                                                       const LinearOperator& precond,
                                                       double tol = 1e-10,
                                                       int maxit = 1000) {
    auto t0 = std::chrono::steady_clock::now();
    int n = A.n;
    if ((int)b.size() != n) throw DimensionMismatch("pcg: rhs size mismatch");
    std::vector<double> x((size_t)n, 0.0), r = b;
    std::vector<double> z = precond ? precond(r) : r;
    std::vector<double> p = z;
    double rz = dot(r, z);
    if (rz < 0) throw BreakdownNegativeCurvature("pcg: (r, Mr) < 0");
    double rz0 = rz;
    double bnorm = norm2(b);

    SolveReport rep;
    std::vector<double> alphas, betas, gammas;
    int it = 0;
    for (; it < maxit && rz0 > 0; ++it) {
        if (std::sqrt(rz / rz0) <= tol) {
            rep.converged = true;
            break;
        }
        std::vector<double> Ap = A.apply(p);
        double pAp = dot(p, Ap);
        if (pAp <= 0) throw BreakdownNegativeCurvature("pcg: (p, Ap) <= 0");
        double alpha = rz / pAp;
        axpy(alpha, p, x);
        axpy(-alpha, Ap, r);
        z = precond ? precond(r) : r;
        double rz_new = dot(r, z);
        if (rz_new < 0) throw BreakdownNegativeCurvature("pcg: (r, Mr) < 0");
        double beta = rz_new / rz;
        gammas.push_back(alpha * rz);
        alphas.push_back(alpha);
        betas.push_back(beta);
        rz = rz_new;
        for (size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    if (rz0 == 0) rep.converged = true;

    rep.iterations = it;
    rep.relative_residual = rz0 > 0 ? std::sqrt(rz / rz0) : 0;
    {
        std::vector<double> res = b;
        std::vector<double> Ax = A.apply(x);
        for (size_t i = 0; i < res.size(); ++i) res[i] -= Ax[i];
        rep.true_relative_residual = bnorm > 0 ? norm2(res) / bnorm : 0;
    }
    // Lanczos tridiagonal from CG scalars
    std::vector<double> d, e;
    for (size_t k = 0; k < alphas.size(); ++k) {
        double dk = 1.0 / alphas[k];
        if (k > 0) dk += betas[k - 1] / alphas[k - 1];
        d.push_back(dk);
        if (k + 1 < alphas.size()) e.push_back(std::sqrt(betas[k]) / alphas[k]);
    }
    auto [lmin, lmax] = detail::tridiag_extremes(d, e);
    rep.lambda_min = lmin;
    rep.lambda_max = lmax;
    rep.kappa = lmin > 0 ? lmax / lmin : 0;
    // ||e_k||_A^2 = sum_{i >= k} alpha_i (r_i, z_i): store the tail sums
    rep.anorm_error_estimates.assign(gammas.size() + 1, 0.0);
    for (size_t k = gammas.size(); k-- > 0;)
        rep.anorm_error_estimates[k] = rep.anorm_error_estimates[k + 1] + gammas[k];
    for (auto& v : rep.anorm_error_estimates) v = std::sqrt(std::max(0.0, v));

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), rep};
}

// Lanczos with full reorthogonalization for a symmetric operator.
inline std::pair<double, double> extreme_eigs(const LinearOperator& op, int dim, int iters,
                                              uint64_t seed = 12345) {
    if (dim <= 0) return {0, 0};
    iters = std::min(iters, dim);
    Rng rng(seed);
    std::vector<std::vector<double>> V;
    std::vector<double> v = rng.normal_vector((size_t)dim);
    double nv = norm2(v);
    for (auto& x : v) x /= nv;
    std::vector<double> d, e;
    double beta = 0;
    std::vector<double> v_prev((size_t)dim, 0.0);
    for (int k = 0; k < iters; ++k) {
        V.push_back(v);
        std::vector<double> w = op(v);
        double alpha = dot(v, w);
        for (size_t i = 0; i < w.size(); ++i) w[i] -= alpha * v[i] + beta * v_prev[i];
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : V) {
                double c = dot(q, w);
                axpy(-c, q, w);
            }
        d.push_back(alpha);
        beta = norm2(w);
        if (k + 1 < iters) {
            if (beta < 1e-14) break;  // invariant subspace found
            e.push_back(beta);
            v_prev = v;
            for (size_t i = 0; i < w.size(); ++i) v[i] = w[i] / beta;
        }
    }
    if (e.size() >= d.size()) e.resize(d.size() - 1);
    return detail::tridiag_extremes(d, e);
}

// Extreme eigenvalues of X A, where A is SPD and X is symmetric positive
// (semi)definite: X A is self-adjoint in the A-inner product, so run Lanczos
// with that inner product. X == nullptr means identity. With iters == dim the
// tridiagonalization is exact up to roundoff.
inline std::pair<double, double> preconditioned_extremes(const SparseMatrix& A,
                                                         const LinearOperator& X, int iters,
                                                         uint64_t seed = 12345) {
    int dim = A.n;
    if (dim <= 0) return {0, 0};
    iters = std::min(iters, dim);
    Rng rng(seed);
    std::vector<std::vector<double>> V, AV;
    std::vector<double> v = rng.normal_vector((size_t)dim);
    std::vector<double> Av = A.apply(v);
    double nv = std::sqrt(dot(v, Av));
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] /= nv;
        Av[i] /= nv;
    }
    std::vector<double> d, e;
    double beta = 0;
    std::vector<double> v_prev((size_t)dim, 0.0);
    for (int k = 0; k < iters; ++k) {
        V.push_back(v);
        AV.push_back(Av);
        std::vector<double> w = X ? X(Av) : Av;
        double alpha = dot(w, Av);
        for (size_t i = 0; i < w.size(); ++i) w[i] -= alpha * v[i] + beta * v_prev[i];
        for (int pass = 0; pass < 2; ++pass)
            for (size_t q = 0; q < V.size(); ++q) {
                double c = dot(AV[q], w);
                axpy(-c, V[q], w);
            }
        d.push_back(alpha);
        std::vector<double> Aw = A.apply(w);
        beta = std::sqrt(std::max(0.0, dot(w, Aw)));
        if (k + 1 < iters) {
            if (beta < 1e-12) break;
            e.push_back(beta);
            v_prev = v;
            for (size_t i = 0; i < w.size(); ++i) {
                v[i] = w[i] / beta;
                Av[i] = Aw[i] / beta;
            }
        }
    }
    if (e.size() >= d.size()) e.resize(d.size() - 1);
    return detail::tridiag_extremes(d, e);
}

} // namespace tetml

#endif
