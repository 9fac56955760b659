#include "oracles.hpp"

#include "rapflow/error.hpp"
#include "rapflow/passage.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rapflow;
using oracle::mat;
using oracle::row;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

PsiSolution psi_of(const RapFluidModel& m, const PsiOptions& o = {}) {
    return psi_solve(censor_zero(m), o);
}

struct Scalar {
    double a, b;
};

}  // namespace

TEST(Psi, ScalarModelsMatchQuadraticRoot) {
    for (Scalar s : {Scalar{2, 1}, Scalar{1, 2}, Scalar{3, 0.5}, Scalar{0.7, 4}}) {
        const PsiSolution p = psi_of(oracle::scalar_model(s.a, s.b));
        EXPECT_TRUE(p.converged);
        EXPECT_NEAR(p.psi(0, 0), oracle::scalar_psi(-s.a, -s.b, s.a, s.b), 1e-10) << s.a << " " << s.b;
        EXPECT_LE(p.residual, 1e-11);
    }
}

TEST(Psi, ReferenceValues) {
    EXPECT_NEAR(psi_of(oracle::m1()).psi(0, 0), 1.0, 1e-10);
    EXPECT_NEAR(psi_of(oracle::m2()).psi(0, 0), 0.5, 1e-10);
    const PsiSolution m4 = psi_of(oracle::m4());
    EXPECT_TRUE(m4.censored);
    EXPECT_NEAR(m4.psi(0, 0), 1.0, 1e-10);
}

TEST(Psi, NullRecurrentModelConvergesSlowlyAndSaysSo) {
    const PsiSolution p = psi_of(oracle::m3());
    EXPECT_FALSE(p.converged);
    EXPECT_EQ(p.iterations, 10000);
    // double root: the error behaves like 2/n
    EXPECT_NEAR(p.psi(0, 0), 1.0, 1e-3);
    EXPECT_LT(p.psi(0, 0), 1.0);
    EXPECT_GT(p.error_estimate, 0.0);
    EXPECT_NEAR(p.residual, std::pow(1.0 - p.psi(0, 0), 2), 1e-12);
}

TEST(Psi, IteratesIncreaseMonotonicallyForMarkovModels) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + trial % 5;
        const Matrix q = oracle::random_generator(n, rng);
        std::vector<Regime> regimes(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) regimes[static_cast<std::size_t>(i)] = i % 2 ? Regime::Minus : Regime::Plus;
        const RapFluidModel m = from_markov_jump(q, regimes);
        Matrix prev;
        bool monotone = true;
        PsiOptions o;
        o.on_iterate = [&](int, const Matrix& psi) {
            if (prev.size() && (psi - prev).minCoeff() < -1e-12) monotone = false;
            prev = psi;
        };
        const PsiSolution p = psi_of(m, o);
        EXPECT_TRUE(monotone) << "trial " << trial;
        EXPECT_GE(p.psi.minCoeff(), 0.0);
        EXPECT_LE((p.psi * ColVector::Ones(p.psi.cols())).maxCoeff(), 1.0 + 1e-10);
    }
}

TEST(Psi, RecurrentMarkovModelsHaveConservativeU) {
    std::mt19937_64 rng(22);
    int recurrent = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const Matrix q = oracle::random_generator(4, rng);
        const RapFluidModel m = from_markov_jump(q, {Regime::Plus, Regime::Minus, Regime::Plus, Regime::Minus});
        const PassageSolution s = solve_passage(m);
        const ColVector row_sums = s.psi.psi * ColVector::Ones(2);
        if ((row_sums.array() - 1.0).abs().maxCoeff() > 1e-9) continue;
        ++recurrent;
        EXPECT_LE((s.gens.u * ColVector::Ones(2)).cwiseAbs().maxCoeff(), 1e-8);
    }
    EXPECT_GT(recurrent, 5);
}

TEST(Psi, Errors) {
    try {
        psi_solve(mat({{1}}), mat({{-1}}), mat({{1}}), mat({{1}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "unstable-generator");
    }
    EXPECT_THROW(psi_solve(mat({{-1}}), mat({{-1}}), mat({{1, 0}}), mat({{1}})), Error);
}

TEST(Psi, DivergenceIsDetected) {
    // D blocks far too large for the generators: the iterates blow up.
    try {
        psi_solve(mat({{-1}}), mat({{-1}}), mat({{10}}), mat({{10}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "psi-diverged");
    }
}

TEST(QuadratureOracle, FirstIterateIsScalarIntegral) {
    const Matrix p1 = psi_quadrature_oracle(mat({{-2}}), mat({{-1}}), mat({{2}}), mat({{1}}), 1, 2000);
    const double direct = oracle::simpson([](double y) { return std::exp(-2 * y) * 2 * std::exp(-y); }, 0, 40, 4000);
    // Simpson's error on e^{-3y} with these step sizes is a few 1e-8.
    EXPECT_NEAR(p1(0, 0), 2.0 / 3.0, 1e-7);
    EXPECT_NEAR(direct, 2.0 / 3.0, 1e-8);
}

TEST(QuadratureOracle, AgreesWithSylvesterRecursion) {
    for (const RapFluidModel& m : {oracle::m1(), oracle::m2(), oracle::markov_renewal(), oracle::erlang2(1.0, 1.5)}) {
        const CensoredModel c = censor_zero(m);
        const Matrix q = psi_quadrature_oracle(c.c_plus, c.c_minus, c.d_plus_minus, c.d_minus_plus, 200, 4000);
        EXPECT_LE(max_abs(psi_solve(c).psi - q), 1e-5);
        PsiOptions o;
        o.tol = 0.0;
        o.max_iter = 200;
        EXPECT_LE(max_abs(psi_solve(c, o).psi - q), 1e-5);
    }
}

TEST(FirstReturn, ReferenceValues) {
    const RowVector a = row({1});
    EXPECT_NEAR(first_return(a, psi_of(oracle::m1())).prob, 1.0, 1e-10);
    const FirstReturn r = first_return(a, psi_of(oracle::m2()));
    EXPECT_NEAR(r.prob, 0.5, 1e-10);
    EXPECT_NEAR(r.vector(0), 0.5, 1e-10);
    EXPECT_TRUE(r.prob_in_range);
    try {
        first_return(row({0.5}), psi_of(oracle::m2()));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "alpha-not-normalized");
    }
}

TEST(Record, ReferenceValues) {
    const PassageSolution m1 = solve_passage(oracle::m1());
    EXPECT_NEAR(downward_record(row({1}), false, 3.0, m1.gens, m1.psi)(0), 1.0, 1e-9);
    const PassageSolution m2 = solve_passage(oracle::m2());
    EXPECT_NEAR(downward_record(row({1}), true, 1.0, m2.gens, m2.psi)(0), 0.5 * std::exp(-1.0), 1e-10);
    const PassageSolution mr = solve_passage(oracle::markov_renewal());
    const RowVector beta = row({0.3, 0.7});
    EXPECT_LE(max_abs(downward_record(beta, false, 0.0, mr.gens, mr.psi) - beta), 0.0);
    EXPECT_THROW(downward_record(beta, false, -1.0, mr.gens, mr.psi), Error);
}

TEST(Hitting, ReferenceValuesAndMonotonicity) {
    const PassageSolution m1 = solve_passage(oracle::m1());
    EXPECT_NEAR(level_hitting_prob(row({1}), 5.0, m1.gens, m1.psi), 1.0, 1e-9);
    const PassageSolution m2 = solve_passage(oracle::m2());
    EXPECT_NEAR(level_hitting_prob(row({1}), 1.0, m2.gens, m2.psi), 0.5 * std::exp(-1.0), 1e-10);

    const PassageSolution mr = solve_passage(oracle::erlang2(1.0, 1.5));
    const RowVector a = row({1, 0});
    EXPECT_NEAR(level_hitting_prob(a, 0.0, mr.gens, mr.psi), first_return(a, mr.psi).prob, 1e-14);
    double prev = 2.0;
    for (double x = 0.0; x <= 10.0; x += 0.25) {
        const double p = level_hitting_prob(a, x, mr.gens, mr.psi);
        EXPECT_LE(p, prev + 1e-14);
        prev = p;
    }
}

TEST(Crossings, ReferenceValues) {
    const PassageSolution m1 = solve_passage(oracle::m1());
    const CrossingExpectations c1 = crossing_expectations(row({1}), 1.0, m1.gens, m1.psi);
    EXPECT_NEAR(c1.up(0), std::exp(-1.0), 1e-10);
    EXPECT_NEAR(c1.down(0), std::exp(-1.0), 1e-10);
    const PassageSolution m2 = solve_passage(oracle::m2());
    const CrossingExpectations c2 = crossing_expectations(row({1}), 2.0, m2.gens, m2.psi);
    EXPECT_NEAR(c2.up(0), 1.0, 1e-9);
    EXPECT_NEAR(c2.down(0), 0.5, 1e-9);
    const CrossingExpectations c0 = crossing_expectations(row({1}), 0.0, m2.gens, m2.psi);
    EXPECT_EQ(c0.up(0), 1.0);
    EXPECT_NEAR(c0.down(0), 0.5, 1e-10);
}

TEST(Crossings, NonnegativeAndDownIsUpTimesPsi) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix q = oracle::random_generator(4, rng);
        const RapFluidModel m = from_markov_jump(q, {Regime::Plus, Regime::Plus, Regime::Minus, Regime::Minus});
        const PassageSolution s = solve_passage(m);
        const RowVector a = row({0.5, 0.5});
        for (double x = 0.0; x <= 8.0; x += 0.5) {
            const CrossingExpectations c = crossing_expectations(a, x, s.gens, s.psi);
            EXPECT_GE(c.up.minCoeff(), -1e-12);
            EXPECT_LE(max_abs(c.down - c.up * s.psi.psi), 1e-12 * (1 + c.up.sum()));
            const RowVector want = a * oracle::expm(s.gens.k, x);
            EXPECT_LE(max_abs(c.up - want), 1e-10 * (1 + want.sum()));
        }
    }
}

TEST(ExitLaw, DensityIntegratesToMean) {
    const ExitLaw m1 = exit_law(row({1}), Regime::Plus, Regime::Minus, oracle::m1());
    EXPECT_NEAR(m1.density(0.7)(0), 2 * std::exp(-1.4), 1e-14);
    EXPECT_NEAR(m1.mean()(0), 1.0, 1e-14);
    EXPECT_NEAR(exit_law(row({1}), Regime::Plus, Regime::Zero, oracle::m4()).mean()(0), 0.5, 1e-14);

    const RapFluidModel mr = oracle::markov_renewal();
    const ExitLaw law = exit_law(row({0, 1, 0}), Regime::Plus, Regime::Minus, mr);
    for (Eigen::Index j = 0; j < 2; ++j) {
        const double integral = oracle::simpson([&](double t) { return law.density(t)(j); }, 0, 40, 4000);
        EXPECT_NEAR(integral, law.mean()(j), 1e-8);
    }
    EXPECT_NEAR(law.mean().sum(), 1.0, 1e-12);
    EXPECT_THROW(exit_law(row({1}), Regime::Plus, Regime::Plus, oracle::m1()), Error);
}

TEST(ConfinedMean, MatchesMatrixExponential) {
    EXPECT_EQ(confined_mean(row({1}), Regime::Plus, 0.0, oracle::m1())(0), 1.0);
    EXPECT_NEAR(confined_mean(row({1}), Regime::Plus, 1.0, oracle::m1())(0), std::exp(-2.0), 1e-15);
    const RowVector e = confined_mean(row({1, 0}), Regime::Plus, 1.0, oracle::erlang2());
    EXPECT_NEAR(e(0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(e(1), std::exp(-1.0), 1e-15);
    const RowVector want = row({1, 0}) * oracle::expm(oracle::erlang2().c(Regime::Plus), 2.5);
    EXPECT_LE(max_abs(confined_mean(row({1, 0}), Regime::Plus, 2.5, oracle::erlang2()) - want), 1e-14);
}
