#include "rapflow/estimators.hpp"

#include "rapflow/error.hpp"
#include "rapflow/rng.hpp"
#include "rapflow/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace rapflow {

namespace {

// Orbit point alpha in Z+, possibly spread over several blocks; a block is
// drawn with probability alpha_i 1 and the path starts from the
// renormalised block vector.
class StartMixture {
public:
    StartMixture(const RapFluidModel& model, const RowVector& alpha) {
        const auto& s = model.structure();
        if (alpha.size() != s.eta(Regime::Plus)) {
            throw_input("dimension-mismatch", "alpha must have length eta+ = " +
                                                  std::to_string(s.eta(Regime::Plus)));
        }
        if (!alpha.allFinite() || std::abs(alpha.sum() - 1.0) > 1e-10) {
            throw_input("alpha-not-normalized", "alpha must satisfy alpha * 1 = 1");
        }
        double cumulative = 0.0;
        for (std::size_t b = 0; b < s.num_blocks(Regime::Plus); ++b) {
            const auto off = s.offset(Regime::Plus, b);
            const auto m = s.block_size(Regime::Plus, b);
            const double w = alpha.segment(off, m).sum();
            if (w < -1e-12) {
                throw_input("bad-orbit-point", "alpha has negative mass on block " + std::to_string(b));
            }
            if (w <= 1e-12) {
                if (alpha.segment(off, m).cwiseAbs().maxCoeff() > 1e-12) {
                    throw_input("bad-orbit-point", "alpha has zero-mass support on block " +
                                                       std::to_string(b));
                }
                continue;
            }
            RowVector a = RowVector::Zero(alpha.size());
            a.segment(off, m) = alpha.segment(off, m) / w;
            cumulative += w;
            cumulative_.push_back(cumulative);
            states_.push_back({Regime::Plus, b, std::move(a)});
        }
    }

    const OrbitState& sample(Rng& rng) const {
        if (states_.size() == 1) return states_.front();
        const double u = rng.uniform() * cumulative_.back();
        for (std::size_t c = 0; c + 1 < states_.size(); ++c) {
            if (u < cumulative_[c]) return states_[c];
        }
        return states_.back();
    }

private:
    std::vector<double> cumulative_;
    std::vector<OrbitState> states_;
};

// Runs body(i) for i in [0, n) on up to `threads` workers. Every index runs;
// the lowest-index failure is rethrown so the outcome does not depend on
// scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const unsigned workers = static_cast<unsigned>(
        std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::size_t failed_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr failure;

    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

enum class Outcome : unsigned char { Hit, Truncated, Aborted };

Outcome run_passage(const OrbitDynamics& dyn, const StartMixture& start, double x,
                    double horizon, Rng& rng, RowVector& hit_point) {
    OrbitState state = start.sample(rng);
    if (!(horizon > 0.0)) return Outcome::Truncated;
    double t = 0.0;
    double level = 0.0;
    try {
        for (;;) {
            auto holding = dyn.holding_time(state, rng.uniform());
            if (state.regime == Regime::Minus) {
                const double need = level + x;
                if (need <= holding.time) {
                    if (t + need > horizon) return Outcome::Truncated;
                    hit_point = dyn.flow(state, need).a;
                    return Outcome::Hit;
                }
            }
            const double end = t + holding.time;
            if (end >= horizon) return Outcome::Truncated;
            level += level_rate(state.regime) * holding.time;
            t = end;
            state = dyn.jump(holding.flowed, rng.uniform());
        }
    } catch (const Error& e) {
        if (e.code() == "orbit-degenerate") return Outcome::Aborted;
        throw;
    }
}

}  // namespace

SimEstimate summarize(const Matrix& samples, std::uint64_t seed) {
    SimEstimate out;
    out.seed = seed;
    out.n_samples = static_cast<std::size_t>(samples.rows());
    const auto d = samples.cols();
    out.mean = RowVector::Zero(d);
    out.std_error = RowVector::Zero(d);
    if (samples.rows() == 0) return out;
    out.mean = samples.colwise().mean();
    if (samples.rows() > 1) {
        const double n = static_cast<double>(samples.rows());
        const Matrix centred = samples.rowwise() - out.mean;
        const RowVector var = centred.array().square().colwise().sum() / (n - 1.0);
        out.std_error = (var.array() / n).sqrt().matrix();
    }
    return out;
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RAPFLOW_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(std::min(v, 1024UL));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double default_horizon(const RapFluidModel& model) {
    const double s = linalg::spectral_abscissa(model.c(Regime::Plus)) +
                     linalg::spectral_abscissa(model.c(Regime::Minus));
    if (!(s < 0.0)) throw_input("unstable-generator", "C+ and C- must have negative abscissae");
    return 200.0 / std::abs(s);
}

PassageEstimate estimate_level_hitting(const RapFluidModel& model, const RowVector& alpha,
                                       double x, std::size_t n_paths, double horizon,
                                       std::uint64_t seed, const SimOptions& opts) {
    if (!(x >= 0.0)) throw_input("negative-level", "x must be >= 0");
    if (!(horizon >= 0.0)) throw_input("bad-argument", "horizon must be >= 0");
    if (n_paths == 0) throw_input("bad-argument", "need at least one path");

    const OrbitDynamics dyn(model);
    const StartMixture start(model, alpha);
    const auto eta_minus = model.structure().eta(Regime::Minus);

    std::vector<Outcome> outcome(n_paths);
    Matrix points = Matrix::Zero(static_cast<Eigen::Index>(n_paths), eta_minus);
    parallel_for(n_paths, resolve_threads(opts.threads), [&](std::size_t i) {
        Rng rng(seed, i);
        RowVector hit;
        outcome[i] = run_passage(dyn, start, x, horizon, rng, hit);
        if (outcome[i] == Outcome::Hit) points.row(static_cast<Eigen::Index>(i)) = hit;
    });

    PassageEstimate out;
    out.horizon = horizon;
    std::size_t kept = 0;
    for (auto o : outcome) {
        if (o == Outcome::Truncated) ++out.truncated;
        if (o == Outcome::Aborted) ++out.aborted;
        if (o != Outcome::Aborted) ++kept;
    }
    Matrix hits(static_cast<Eigen::Index>(kept), 1);
    Matrix vecs(static_cast<Eigen::Index>(kept), eta_minus);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        if (outcome[i] == Outcome::Aborted) continue;
        hits(r, 0) = outcome[i] == Outcome::Hit ? 1.0 : 0.0;
        vecs.row(r) = points.row(static_cast<Eigen::Index>(i));
        ++r;
    }
    out.prob = summarize(hits, seed);
    out.vector = summarize(vecs, seed);

    if (horizon == 0.0) out.warnings.push_back("horizon is 0: every path is truncated");
    if (out.truncated > 0 && horizon > 0.0) {
        out.warnings.push_back(std::to_string(out.truncated) + " of " + std::to_string(n_paths) +
                               " paths reached the horizon without passage; the estimate is "
                               "biased downward");
    }
    if (out.aborted > 0) {
        out.warnings.push_back(std::to_string(out.aborted) + " of " + std::to_string(n_paths) +
                               " paths aborted at a degenerate orbit point");
    }
    return out;
}

PassageEstimate estimate_first_return(const RapFluidModel& model, const RowVector& alpha,
                                      std::size_t n_paths, double horizon, std::uint64_t seed,
                                      const SimOptions& opts) {
    return estimate_level_hitting(model, alpha, 0.0, n_paths, horizon, seed, opts);
}

namespace {

class Occupation {
public:
    Occupation(const std::vector<double>& grid, double start, double total, std::size_t batches)
        : grid_(grid),
          start_(start),
          end_(start + total),
          width_(total / static_cast<double>(batches)),
          nbins_(static_cast<Eigen::Index>(grid.size()) - 1),
          atoms_(Matrix::Zero(static_cast<Eigen::Index>(batches), 2)),
          bins_(Matrix::Zero(static_cast<Eigen::Index>(batches), 3 * nbins_)) {}

    double end() const { return end_; }

    // Queue starts the segment [t0, t1] at q0 and moves with the regime's
    // regulated dynamics.
    void add(double t0, double t1, Regime k, double q0) {
        double s = std::max(t0, start_);
        const double stop = std::min(t1, end_);
        while (s < stop) {
            auto b = static_cast<Eigen::Index>((s - start_) / width_);
            b = std::min<Eigen::Index>(b, atoms_.rows() - 1);
            const double e = std::min(stop, start_ + static_cast<double>(b + 1) * width_);
            if (e <= s) break;
            piece(b, k, queue_at(k, q0, s - t0), e - s);
            s = e;
        }
    }

    StationaryEstimate finish(std::uint64_t seed) const {
        StationaryEstimate out;
        out.grid = grid_;
        out.batches = static_cast<std::size_t>(atoms_.rows());
        const Matrix atoms = atoms_ / width_;
        const Matrix bins = bins_ / width_;
        out.atom_minus = summarize(atoms.col(0), seed);
        out.atom_zero = summarize(atoms.col(1), seed);
        out.bins_plus = summarize(bins.middleCols(0, nbins_), seed);
        out.bins_minus = summarize(bins.middleCols(nbins_, nbins_), seed);
        out.bins_zero = summarize(bins.middleCols(2 * nbins_, nbins_), seed);
        out.bins = summarize(bins.middleCols(0, nbins_) + bins.middleCols(nbins_, nbins_) +
                                 bins.middleCols(2 * nbins_, nbins_),
                             seed);
        return out;
    }

private:
    static double queue_at(Regime k, double q0, double dt) {
        switch (k) {
            case Regime::Plus: return q0 + dt;
            case Regime::Minus: return std::max(0.0, q0 - dt);
            case Regime::Zero: return q0;
        }
        return q0;
    }

    void spread(Eigen::Index b, Regime k, double lo, double hi) {
        const Eigen::Index col0 = static_cast<Eigen::Index>(index_of(k)) * nbins_;
        for (Eigen::Index i = 0; i < nbins_; ++i) {
            const double overlap = std::min(hi, grid_[i + 1]) - std::max(lo, grid_[i]);
            if (overlap > 0.0) bins_(b, col0 + i) += overlap;
        }
    }

    void piece(Eigen::Index b, Regime k, double q, double dt) {
        switch (k) {
            case Regime::Plus:
                spread(b, k, q, q + dt);
                break;
            case Regime::Minus: {
                const double positive = std::min(q, dt);
                spread(b, k, q - positive, q);
                atoms_(b, 0) += dt - positive;
                break;
            }
            case Regime::Zero:
                if (q <= 0.0) {
                    atoms_(b, 1) += dt;
                } else {
                    const Eigen::Index col0 = 2 * nbins_;
                    for (Eigen::Index i = 0; i < nbins_; ++i) {
                        if (q >= grid_[i] && q < grid_[i + 1]) bins_(b, col0 + i) += dt;
                    }
                }
                break;
        }
    }

    std::vector<double> grid_;
    double start_;
    double end_;
    double width_;
    Eigen::Index nbins_;
    Matrix atoms_;
    Matrix bins_;
};

}  // namespace

StationaryEstimate estimate_stationary(const RapFluidModel& model, const RowVector& alpha,
                                       double total_time, double burn_in,
                                       const std::vector<double>& grid, std::uint64_t seed,
                                       std::size_t batches) {
    if (!(total_time > 0.0)) throw_input("bad-argument", "total_time must be positive");
    if (!(burn_in >= 0.0)) throw_input("bad-argument", "burn_in must be >= 0");
    if (batches < 20) throw_input("bad-argument", "batch means need at least 20 batches");
    if (grid.size() < 2) throw_input("bad-grid", "grid needs at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::isnan(grid[i]) || grid[i] < 0.0 || (i > 0 && !(grid[i] > grid[i - 1]))) {
            throw_input("bad-grid", "grid must be nonnegative and strictly increasing");
        }
    }

    const OrbitDynamics dyn(model);
    const StartMixture start(model, alpha);
    Rng rng(seed, 0);
    Occupation occ(grid, burn_in, total_time, batches);

    OrbitState state = start.sample(rng);
    double t = 0.0;
    double q = 0.0;
    std::size_t jumps = 0;
    for (;;) {
        auto holding = dyn.holding_time(state, rng.uniform());
        const double end = t + holding.time;
        occ.add(t, end, state.regime, q);
        if (end >= occ.end()) break;
        q = std::max(0.0, q + level_rate(state.regime) * holding.time);
        t = end;
        state = dyn.jump(holding.flowed, rng.uniform());
        ++jumps;
    }

    StationaryEstimate out = occ.finish(seed);
    out.jumps = jumps;
    if (jumps < 100 * batches) {
        out.warnings.push_back("few jumps per batch; batch-mean errors may be unreliable");
    }
    return out;
}

}  // namespace rapflow
