#include <doctest.h>

#include <map>

#include "oracles.hpp"
#include "tetml/io.hpp"
#include "tetml/precond.hpp"
#include "tetml/solver.hpp"

using namespace tetml;

namespace {

SparseMatrix diag_matrix(const std::vector<double>& d) {
    std::map<std::pair<int, int>, double> t;
    for (size_t i = 0; i < d.size(); ++i) t[{(int)i, (int)i}] = d[i];
    return SparseMatrix::from_triplets((int)d.size(), t);
}

} // namespace

TEST_CASE("conjugate gradients on the identity converges in one step") {
    SparseMatrix A = diag_matrix(std::vector<double>(10, 1.0));
    std::vector<double> b(10, 2.0);
    auto [x, rep] = pcg(A, b, nullptr, 1e-10, 100);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    for (double v : x) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("eigenvalue estimates from the CG scalars are exact for diag(1,10)") {
    SparseMatrix A = diag_matrix({1.0, 10.0});
    std::vector<double> b = {1.0, 1.0};
    auto [x, rep] = pcg(A, b, nullptr, 1e-14, 10);
    CHECK(rep.converged);
    CHECK(rep.iterations == 2);
    CHECK(rep.lambda_min == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.lambda_max == doctest::Approx(10.0).epsilon(1e-8));
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("energy-norm error estimates decrease monotonically") {
    Hierarchy h = build_scenario(Scenario::Uniform, 2);
    TransferChain chain =
        build_transfer(h, Coefficients::poisson([](const Vec3&) { return 1.0; }));
    auto [x, rep] = pcg(chain.sys[2].A, chain.sys[2].F, nullptr, 1e-10, 500);
    CHECK(rep.converged);
    REQUIRE(rep.anorm_error_estimates.size() >= 3);
    for (size_t k = 1; k < rep.anorm_error_estimates.size(); ++k)
        CHECK(rep.anorm_error_estimates[k] <= rep.anorm_error_estimates[k - 1] + 1e-15);
}

TEST_CASE("indefinite operators are reported as breakdowns") {
    SparseMatrix A = diag_matrix({1.0, -1.0});
    std::vector<double> b = {1.0, 1.0};
    CHECK_THROWS_AS(pcg(A, b, nullptr, 1e-10, 10), BreakdownNegativeCurvature);
}

TEST_CASE("Lanczos extremes") {
    SUBCASE("identity") {
        auto [lmin, lmax] = extreme_eigs(
            [](const std::vector<double>& x) { return x; }, 7, 7);
        CHECK(lmin == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(lmax == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("diag(1..50) with a full Krylov space") {
        std::vector<double> d(50);
        for (size_t i = 0; i < d.size(); ++i) d[i] = (double)(i + 1);
        SparseMatrix A = diag_matrix(d);
        auto [lmin, lmax] = extreme_eigs(
            [&](const std::vector<double>& x) { return A.apply(x); }, 50, 50);
        CHECK(lmin == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(lmax == doctest::Approx(50.0).epsilon(1e-6));
    }
}

TEST_CASE("preconditioned spectrum matches a dense symmetric oracle") {
    Hierarchy h = build_scenario(Scenario::Uniform, 2);
    TransferChain chain = build_transfer(h, Coefficients::h1());
    PrecondConfig cfg;
    cfg.kind = PrecondKind::BPX;
    Preconditioner pc(chain, cfg);
    const SparseMatrix& A = chain.sys[2].A;
    int n = A.n;
    REQUIRE(n <= 300);

    auto [lmin, lmax] = preconditioned_extremes(A, pc.as_operator(), n);

    // dense oracle: eigenvalues of X A equal those of A^{1/2} X A^{1/2}
    Eigen::MatrixXd Ad = oracle::to_dense(A);
    Eigen::MatrixXd Xd(n, n);
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
    CHECK(lmin == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-6));
    CHECK(lmax == doctest::Approx(es.eigenvalues()(n - 1)).epsilon(1e-6));
}
