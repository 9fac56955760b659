#include "rapflow/estimators.hpp"
#include "rapflow/linalg.hpp"
#include "rapflow/passage.hpp"
#include "rapflow/rng.hpp"
#include "rapflow/sim.hpp"
#include "rapflow/stationary.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace rapflow;

namespace {

Matrix random_generator(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix q(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) q(i, j) = i == j ? 0.0 : u(rng);
        q(i, i) = -q.row(i).sum();
    }
    return q;
}

RapFluidModel random_mjp(Eigen::Index n, std::uint64_t seed) {
    std::vector<Regime> regimes;
    for (Eigen::Index i = 0; i < n; ++i) regimes.push_back(i % 2 ? Regime::Minus : Regime::Plus);
    return from_markov_jump(random_generator(n, seed), regimes);
}

RapFluidModel markov_renewal() {
    std::map<RegimePair, Matrix> routing;
    routing[{Regime::Plus, Regime::Minus}] = Matrix::Ones(2, 1);
    routing[{Regime::Minus, Regime::Plus}] = (Matrix(1, 2) << 0.4, 0.6).finished();
    std::map<Regime, std::vector<MePhase>> phases;
    phases[Regime::Plus] = {MePhase{RowVector::Ones(1), Matrix::Constant(1, 1, -1.0)},
                            MePhase{(RowVector(2) << 1, 0).finished(),
                                    (Matrix(2, 2) << -2, 2, 0, -2).finished()}};
    phases[Regime::Minus] = {MePhase{(RowVector(2) << 1, 0).finished(),
                                     (Matrix(2, 2) << -1.5, 1.5, 0, -1.5).finished()}};
    return from_markov_renewal_me(routing, phases);
}

void BM_Expm(benchmark::State& state) {
    const Matrix q = random_generator(state.range(0), 1);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::expm(q, 1.7));
}
BENCHMARK(BM_Expm)->Arg(2)->Arg(8)->Arg(32);

void BM_Sylvester(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Matrix a = random_generator(n, 2) - Matrix::Identity(n, n);
    const Matrix b = random_generator(n, 3) - Matrix::Identity(n, n);
    const Matrix q = Matrix::Ones(n, n);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::sylvester_solve(a, b, q));
}
BENCHMARK(BM_Sylvester)->Arg(2)->Arg(8)->Arg(16);

void BM_PsiSolve(benchmark::State& state) {
    const CensoredModel m = censor_zero(random_mjp(state.range(0), 4));
    for (auto _ : state) benchmark::DoNotOptimize(psi_solve(m));
}
BENCHMARK(BM_PsiSolve)->Arg(4)->Arg(16)->Arg(32);

void BM_StationarySolve(benchmark::State& state) {
    const RapFluidModel m = markov_renewal();
    for (auto _ : state) benchmark::DoNotOptimize(stationary_solve(m));
}
BENCHMARK(BM_StationarySolve);

void BM_HoldingTimeAndJump(benchmark::State& state) {
    const RapFluidModel m = markov_renewal();
    const OrbitDynamics dyn(m);
    OrbitState s = make_state(m, Regime::Plus, (RowVector(3) << 0, 1, 0).finished());
    Rng rng(7, 0);
    for (auto _ : state) {
        const auto h = dyn.holding_time(s, rng.uniform());
        s = dyn.jump(h.flowed, rng.uniform());
        benchmark::DoNotOptimize(s);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_HoldingTimeAndJump);

void BM_FirstReturnEstimate(benchmark::State& state) {
    const RapFluidModel m = markov_renewal();
    const RowVector alpha = (RowVector(3) << 1, 0, 0).finished();
    SimOptions opts;
    opts.threads = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(estimate_first_return(m, alpha, 10000, 100.0, 1, opts));
    }
}
BENCHMARK(BM_FirstReturnEstimate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
