#pragma once

#include "rapflow/linalg.hpp"
#include "rapflow/model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rapflow {

// Monte Carlo point estimate; std_error = sample standard deviation / √n.
struct SimEstimate {
    RowVector mean;
    RowVector std_error;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;

    double value() const { return mean(0); }
    double error() const { return std_error(0); }
};

// Builds an estimate from one sample per row.
SimEstimate summarize(const Matrix& samples, std::uint64_t seed);

struct SimOptions {
    // 0 picks RAPFLOW_THREADS when set, else the hardware concurrency.
    unsigned threads = 0;
};

unsigned resolve_threads(unsigned requested);

// 200 / |abscissa(C+) + abscissa(C-)|
double default_horizon(const RapFluidModel& model);

struct PassageEstimate {
    SimEstimate prob;      // fraction of paths with τ ≤ horizon
    SimEstimate vector;    // mean of A_τ 1{τ ≤ horizon}, length η^-
    std::size_t truncated = 0;
    std::size_t aborted = 0;
    double horizon = 0.0;
    std::vector<std::string> warnings;
};

// τ = first time R_t reaches −x, for paths started at level 0 in Z+ with
// orbit point alpha (a mixture over blocks is sampled block-wise).
PassageEstimate estimate_level_hitting(const RapFluidModel& model, const RowVector& alpha,
                                       double x, std::size_t n_paths, double horizon,
                                       std::uint64_t seed, const SimOptions& opts = {});

PassageEstimate estimate_first_return(const RapFluidModel& model, const RowVector& alpha,
                                      std::size_t n_paths, double horizon, std::uint64_t seed,
                                      const SimOptions& opts = {});

struct StationaryEstimate {
    std::vector<double> grid;
    SimEstimate atom_minus;  // time fraction with Q = 0 in regime Minus
    SimEstimate atom_zero;   // time fraction with Q = 0 in regime Zero
    SimEstimate bins;        // time fraction with Q in [grid[i], grid[i+1]), Q > 0
    SimEstimate bins_plus;
    SimEstimate bins_minus;
    SimEstimate bins_zero;
    std::size_t batches = 0;
    std::size_t jumps = 0;
    std::vector<std::string> warnings;
};

// Time averages of the regulated queue along one path over
// [burn_in, burn_in + total_time], standard errors from batch means.
StationaryEstimate estimate_stationary(const RapFluidModel& model, const RowVector& alpha,
                                       double total_time, double burn_in,
                                       const std::vector<double>& grid, std::uint64_t seed,
                                       std::size_t batches = 20);

}  // namespace rapflow
