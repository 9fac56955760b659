#include "oracles.hpp"

#include "rapflow/error.hpp"
#include "rapflow/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rapflow;
using oracle::mat;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Expm, ZeroTimeIsIdentity) {
    const Matrix a = mat({{1, 2}, {3, 4}});
    EXPECT_EQ(linalg::expm(a, 0.0), Matrix::Identity(2, 2));
}

TEST(Expm, ScalarIsExp) {
    EXPECT_NEAR(linalg::expm(mat({{-2}}), 1.5)(0, 0), std::exp(-3.0), 1e-15);
}

TEST(Expm, DiagonalAndNilpotent) {
    const Matrix d = mat({{-1, 0}, {0, 0.5}});
    const Matrix e = linalg::expm(d, 2.0);
    EXPECT_NEAR(e(0, 0), std::exp(-2.0), 1e-15);
    EXPECT_NEAR(e(1, 1), std::exp(1.0), 1e-14);
    EXPECT_EQ(e(0, 1), 0.0);
    // Erlang block: e^{St} = e^{-t} [[1, t], [0, 1]]
    const Matrix s = linalg::expm(mat({{-1, 1}, {0, -1}}), 1.0);
    EXPECT_NEAR(s(0, 0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(s(0, 1), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(s(1, 0), 0.0, 1e-16);
}

TEST(Expm, MatchesIndependentImplementation) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 6;
        const double scale = std::pow(10.0, -3.0 + 5.0 * (trial % 11) / 10.0);
        const Matrix a = oracle::random_matrix(n, n, rng) * scale;
        const Matrix got = linalg::expm(a);
        const Matrix want = oracle::expm(a);
        EXPECT_LE(max_abs(got - want), 1e-11 * std::max(1.0, max_abs(want)))
            << "n=" << n << " scale=" << scale;
    }
}

TEST(Expm, SemigroupProperty) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 5;
        const Matrix q = oracle::random_generator(n, rng, 3.0);
        std::uniform_real_distribution<double> u(0.0, 4.0);
        const double s = u(rng);
        const double t = u(rng);
        const Matrix lhs = linalg::expm(q, s + t);
        const Matrix rhs = linalg::expm(q, s) * linalg::expm(q, t);
        EXPECT_LE(max_abs(lhs - rhs), 1e-12);
    }
}

TEST(Expm, GeneratorGivesStochasticMatrix) {
    std::mt19937_64 rng(3);
    const Matrix q = oracle::random_generator(4, rng);
    const Matrix p = linalg::expm(q, 7.0);
    EXPECT_LE((p * linalg::ones(4) - linalg::ones(4)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_GE(p.minCoeff(), 0.0);
}

TEST(Expm, Errors) {
    EXPECT_THROW(linalg::expm(Matrix(2, 3)), Error);
    Matrix bad = mat({{1, NAN}, {0, 1}});
    try {
        linalg::expm(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "non-finite");
    }
    try {
        linalg::expm(mat({{1}}), -1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "negative-time");
    }
}

TEST(Sylvester, RandomInstancesHaveSmallResidual) {
    std::mt19937_64 rng(4);
    int solved = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 1 + trial % 5;
        const int n = 1 + (trial / 5) % 5;
        // Stable A and B keep λ_A + λ_B away from zero.
        const Matrix a = oracle::random_generator(m, rng) - Matrix::Identity(m, m) * 0.5;
        const Matrix b = oracle::random_generator(n, rng) - Matrix::Identity(n, n) * 0.5;
        const Matrix q = oracle::random_matrix(m, n, rng);
        const Matrix x = linalg::sylvester_solve(a, b, q);
        const double scale = linalg::inf_norm(a) + linalg::inf_norm(b);
        EXPECT_LE(linalg::sylvester_residual(a, b, q, x), 1e-12 * scale * (1 + linalg::inf_norm(x)));
        ++solved;
    }
    EXPECT_EQ(solved, 1000);
}

TEST(Sylvester, ScalarAndReuse) {
    const linalg::SylvesterSolver s(mat({{-2}}), mat({{-1}}));
    EXPECT_NEAR(s.solve(mat({{3}}))(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(s.solve(mat({{-6}}))(0, 0), 2.0, 1e-15);
}

TEST(Sylvester, SingularSpectraAreRejected) {
    try {
        linalg::sylvester_solve(mat({{1}}), mat({{-1}}), mat({{1}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "sylvester-singular");
    }
}

TEST(Spectrum, AbscissaOfKnownMatrices) {
    EXPECT_NEAR(linalg::spectral_abscissa(mat({{-1, 1}, {0, -3}})), -1.0, 1e-14);
    // rotation block: eigenvalues -0.5 ± 2i
    EXPECT_NEAR(linalg::spectral_abscissa(mat({{-0.5, 2}, {-2, -0.5}})), -0.5, 1e-14);
}

TEST(Spectrum, ZeroEigenvalueCount) {
    EXPECT_EQ(linalg::count_zero_eigenvalues(mat({{-1, 1}, {1, -1}}), 1e-9), 1);
    EXPECT_EQ(linalg::count_zero_eigenvalues(mat({{0, 0}, {0, 0}}), 1e-9, 1.0), 2);
    EXPECT_EQ(linalg::count_zero_eigenvalues(mat({{-1, 0}, {0, -2}}), 1e-9), 0);
}

TEST(Spectrum, LeftNullVectorOfGenerator) {
    const Matrix q = mat({{-2, 2}, {1, -1}});
    const RowVector v = linalg::left_null_vector(q);
    EXPECT_NEAR(v(0), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(v(1), 2.0 / 3.0, 1e-14);
    EXPECT_LE(linalg::inf_norm(RowVector(v * q)), 1e-14);
}

TEST(Spectrum, LeftNullVectorNeedsSimpleZero) {
    try {
        linalg::left_null_vector(Matrix::Zero(2, 2), 1e-7, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "eigenzero-violation");
    }
    EXPECT_THROW(linalg::left_null_vector(mat({{-1}})), Error);
}
