#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "lagoon/error.hpp"
#include "lagoon/sparse.hpp"

using namespace lagoon;

namespace {

using Dense = std::vector<std::vector<double>>;

std::vector<double> dense_solve(Dense a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        for (std::size_t i = k + 1; i < n; ++i) {
            if (std::abs(a[i][k]) > std::abs(a[p][k])) p = i;
        }
        std::swap(a[k], a[p]);
        std::swap(b[k], b[p]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
        x[i] = s / a[i][i];
    }
    return x;
}

// S B^T B S with a random diagonal S, so Jacobi scaling changes the iteration.
Dense random_spd(std::size_t n, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> col(0, n - 1);
    Dense b(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        b[i][i] = 2.0;
        for (int k = 0; k < 3; ++k) b[i][col(rng)] += 0.4 * u(rng);
    }
    std::vector<double> scale(n);
    for (double& s : scale) s = std::exp(1.5 * u(rng));
    Dense a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += b[k][i] * b[k][j];
            a[i][j] = scale[i] * scale[j] * s;
        }
    }
    return a;
}

SparseMatrix to_sparse(const Dense& a, bool symmetric) {
    TripletBuilder t(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[i][j] != 0.0) t.add(i, j, a[i][j]);
        }
    }
    return t.build(symmetric);
}

SparseMatrix laplacian_1d(std::size_t n, bool neumann) {
    TripletBuilder t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool end = i == 0 || i + 1 == n;
        t.add(i, i, neumann && end ? 1.0 : 2.0);
        if (i > 0) t.add(i, i - 1, -1.0);
        if (i + 1 < n) t.add(i, i + 1, -1.0);
    }
    return t.build(true);
}

double rel_diff(std::span<const double> a, std::span<const double> b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num / den);
}

} // namespace

TEST(Sparse, DuplicateTripletsAccumulate) {
    TripletBuilder t(2);
    t.add(0, 0, 1.0);
    t.add(0, 0, 2.0);
    t.add(1, 0, 1.0);
    t.add(1, 0, -1.0);
    const SparseMatrix a = t.build(false);
    EXPECT_EQ(a.at(0, 0), 3.0);
    EXPECT_EQ(a.at(1, 0), 0.0);
    EXPECT_EQ(a.nonzeros(), 1u);
}

TEST(Sparse, OutOfRangeTripletIsRejected) {
    TripletBuilder t(3);
    EXPECT_THROW(t.add(3, 0, 1.0), InvalidArgument);
    EXPECT_THROW(t.add(0, 7, 1.0), InvalidArgument);
}

TEST(Sparse, IdentityMatvec) {
    const std::size_t n = 17;
    TripletBuilder t(n);
    for (std::size_t i = 0; i < n; ++i) t.add(i, i, 1.0);
    const SparseMatrix id = t.build(true);
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    std::vector<double> x(n);
    for (double& v : x) v = g(rng);
    EXPECT_EQ(id.multiply(x), x);
}

TEST(Sparse, LaplacianRowSums) {
    const SparseMatrix a = laplacian_1d(4, false);
    const std::vector<double> ones(4, 1.0);
    EXPECT_EQ(a.multiply(ones), (std::vector<double>{1, 0, 0, 1}));
    EXPECT_TRUE(a.is_symmetric(0.0));
    EXPECT_EQ(a.diagonal(), (std::vector<double>{2, 2, 2, 2}));
}

TEST(Sparse, CgSolvesDiagonalSystem) {
    TripletBuilder t(5);
    for (std::size_t i = 0; i < 5; ++i) t.add(i, i, static_cast<double>(i + 1));
    const std::vector<double> b{1, 2, 3, 4, 5};
    SolveReport report;
    const auto x = cg_solve(t.build(true), b, {}, &report);
    for (double v : x) EXPECT_NEAR(v, 1.0, 1e-12);
    EXPECT_LE(report.relative_residual, 1e-10);
}

TEST(Sparse, CgSolvesCompatibleNeumannProblem) {
    const std::size_t n = 50;
    std::vector<double> b(n, 0.0);
    b.front() = 1.0;
    b.back() = -1.0;
    SolverOptions o;
    o.nullspace = Nullspace::Constants;
    SolveReport report;
    const SparseMatrix a = laplacian_1d(n, true);
    const auto x = cg_solve(a, b, o, &report);
    EXPECT_NEAR(std::accumulate(x.begin(), x.end(), 0.0), 0.0, 1e-10);
    const auto r = a.multiply(x);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r[i], b[i], 1e-9);
    for (std::size_t i = 1; i < n; ++i) EXPECT_NEAR(x[i - 1] - x[i], 1.0, 1e-8);
}

TEST(Sparse, CgRejectsIncompatibleNeumannData) {
    const std::vector<double> b(20, 1.0);
    SolverOptions o;
    o.nullspace = Nullspace::Constants;
    EXPECT_THROW(cg_solve(laplacian_1d(20, true), b, o), CompatibilityError);
}

TEST(Sparse, NonConvergenceCarriesHistory) {
    const std::size_t n = 400;
    std::vector<double> b(n, 1.0);
    SolverOptions o;
    o.max_iter = 5;
    o.jacobi = false;
    try {
        (void)cg_solve(laplacian_1d(n, false), b, o);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_FALSE(e.residual_history().empty());
        EXPECT_EQ(e.code(), "solver");
    }
}

TEST(Sparse, PreconditionedAndPlainCgMatchDenseSolve) {
    std::mt19937 rng(11);
    const double tol = 1e-10;
    for (std::size_t n : {5u, 40u, 120u, 200u}) {
        const Dense dense = random_spd(n, rng);
        const SparseMatrix a = to_sparse(dense, true);
        ASSERT_TRUE(a.is_symmetric(1e-12));
        std::normal_distribution<double> g;
        std::vector<double> b(n);
        for (double& v : b) v = g(rng);
        const auto exact = dense_solve(dense, b);
        SolverOptions jacobi;
        jacobi.tol = tol;
        SolverOptions plain = jacobi;
        plain.jacobi = false;
        const auto xj = cg_solve(a, b, jacobi);
        const auto xp = cg_solve(a, b, plain);
        EXPECT_LE(rel_diff(xj, xp), 10 * tol) << "n " << n;
        EXPECT_LE(rel_diff(xj, exact), 10 * tol) << "n " << n;
    }
}

TEST(Sparse, BicgstabSolvesNonsymmetricSystems) {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 150;
    Dense dense(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        dense[i][i] = 4.0 + u(rng);
        if (i > 0) dense[i][i - 1] = -1.0 + 0.5 * u(rng);
        if (i + 1 < n) dense[i][i + 1] = -1.5 + 0.5 * u(rng);
        dense[i][(i * 7) % n] += 0.3 * u(rng);
    }
    const SparseMatrix a = to_sparse(dense, false);
    std::vector<double> b(n);
    for (double& v : b) v = u(rng);
    const auto exact = dense_solve(dense, b);
    for (bool ilu : {false, true}) {
        SolverOptions o;
        o.ilu = ilu;
        SolveReport report;
        const auto x = bicgstab_solve(a, b, o, &report, exact);
        EXPECT_LE(rel_diff(x, exact), 1e-9);
        const auto cold = bicgstab_solve(a, b, o, &report);
        EXPECT_LE(rel_diff(cold, exact), 1e-8) << "ilu " << ilu;
        EXPECT_LE(report.relative_residual, 1e-10);
    }
}

TEST(Sparse, ZeroRightHandSideGivesZero) {
    const std::vector<double> b(10, 0.0);
    for (double v : cg_solve(laplacian_1d(10, false), b, {})) EXPECT_EQ(v, 0.0);
    for (double v : bicgstab_solve(laplacian_1d(10, false), b, {})) EXPECT_EQ(v, 0.0);
}

TEST(Sparse, MatrixMarketExport) {
    std::ostringstream os;
    write_matrix_market(os, laplacian_1d(3, false));
    std::istringstream is(os.str());
    std::string banner;
    std::getline(is, banner);
    EXPECT_EQ(banner.rfind("%%MatrixMarket matrix coordinate real general", 0), 0u);
    std::size_t rows = 0, cols = 0, nnz = 0;
    is >> rows >> cols >> nnz;
    EXPECT_EQ(rows, 3u);
    EXPECT_EQ(cols, 3u);
    EXPECT_EQ(nnz, 7u);
    std::size_t i = 0, j = 0;
    double v = 0;
    is >> i >> j >> v;
    EXPECT_EQ(i, 1u);
    EXPECT_EQ(j, 1u);
    EXPECT_EQ(v, 2.0);
}
