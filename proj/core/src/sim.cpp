#include "rapflow/sim.hpp"

#include "rapflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace rapflow {

namespace {

constexpr double kIntensityTol = 1e-9;
constexpr double kMaxHolding = 1e6;

double advance_level(double level, Regime k, double dt, bool regulated) {
    const double next = level + level_rate(k) * dt;
    return regulated ? std::max(0.0, next) : next;
}

}  // namespace

OrbitState make_state(const RapFluidModel& model, Regime regime, const RowVector& a) {
    const auto& s = model.structure();
    if (s.eta(regime) == 0) throw_input("bad-regime", "regime not present in the model");
    if (a.size() != s.eta(regime)) {
        throw_input("dimension-mismatch", "orbit vector has length " + std::to_string(a.size()) +
                                              ", expected " + std::to_string(s.eta(regime)));
    }
    if (!a.allFinite() || std::abs(a.sum() - 1.0) > 1e-10) {
        throw_input("alpha-not-normalized", "orbit vector must satisfy a * 1 = 1");
    }
    std::optional<std::size_t> block;
    for (Eigen::Index c = 0; c < a.size(); ++c) {
        if (std::abs(a(c)) <= 1e-12) continue;
        const std::size_t b = s.block_of(regime, c);
        if (block && *block != b) {
            throw_input("bad-orbit-point", "orbit vector has support in more than one block");
        }
        block = b;
    }
    if (!block) throw_input("bad-orbit-point", "orbit vector is zero");
    return {regime, *block, a};
}

OrbitDynamics::OrbitDynamics(const RapFluidModel& model) : model_(&model) {
    const auto& s = model.structure();
    for (Regime k : kAllRegimes) {
        auto& list = blocks_[index_of(k)];
        for (std::size_t i = 0; i < s.num_blocks(k); ++i) {
            BlockData bd;
            bd.offset = s.offset(k, i);
            bd.generator = model.c_block(k, i, i);
            bd.exit = -bd.generator * linalg::ones(bd.generator.rows());
            auto add = [&](Regime ell, std::size_t j, const Matrix& blk) {
                if (blk.isZero(0.0)) return;
                bd.targets.push_back({ell, j, blk, blk * linalg::ones(blk.cols())});
            };
            for (std::size_t j = 0; j < s.num_blocks(k); ++j) {
                if (j != i) add(k, j, model.c_block(k, i, j));
            }
            for (Regime ell : kAllRegimes) {
                if (ell == k) continue;
                for (std::size_t j = 0; j < s.num_blocks(ell); ++j) {
                    add(ell, j, model.d_block(k, ell, i, j));
                }
            }
            list.push_back(std::move(bd));
        }
    }
}

const OrbitDynamics::BlockData& OrbitDynamics::block(const OrbitState& state) const {
    const auto& list = blocks_[index_of(state.regime)];
    if (state.block >= list.size()) throw_input("bad-orbit-point", "block index out of range");
    return list[state.block];
}

OrbitState OrbitDynamics::flow(const OrbitState& state, double dt) const {
    if (!(dt >= 0.0)) throw_input("negative-time", "flow step needs dt >= 0");
    if (dt == 0.0) return state;
    const auto& bd = block(state);
    const auto m = bd.generator.rows();
    if (m == 1) return state;  // a one-dimensional block is a single point

    const RowVector v = state.a.segment(bd.offset, m) * linalg::expm(bd.generator, dt);
    const double mass = v.sum();
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw_numerical("orbit-degenerate", "A e^{Gamma t} 1 is not positive along the flow");
    }
    OrbitState out{state.regime, state.block, RowVector::Zero(state.a.size())};
    out.a.segment(bd.offset, m) = v / mass;
    return out;
}

double OrbitDynamics::survival(const OrbitState& state, double h) const {
    const auto& bd = block(state);
    const auto m = bd.generator.rows();
    if (m == 1) return std::exp(bd.generator(0, 0) * h);
    return (state.a.segment(bd.offset, m) * linalg::expm(bd.generator, h)).sum();
}

OrbitDynamics::Holding OrbitDynamics::holding_time(const OrbitState& state, double u) const {
    if (u >= 1.0) return {0.0, state};
    if (!(u > 0.0)) throw_input("bad-argument", "uniform variate must lie in (0, 1]");
    const auto& bd = block(state);
    const auto m = bd.generator.rows();
    const double log_u = std::log(u);

    if (m == 1) {
        const double rate = -bd.generator(0, 0);
        if (rate < -kIntensityTol) throw_numerical("invalid-intensity", "negative exit rate");
        const double h = rate > 0.0 ? -log_u / rate : std::numeric_limits<double>::infinity();
        if (h > kMaxHolding) {
            throw_numerical("holding-time-overflow", "no jump within the holding-time cap");
        }
        return {h, state};
    }

    const RowVector a = state.a.segment(bd.offset, m);
    RowVector v;
    auto eval = [&](double h) {
        v = a * linalg::expm(bd.generator, h);
        return v.sum();
    };

    const double rate0 = a.dot(bd.exit.transpose());
    if (rate0 < -kIntensityTol) throw_numerical("invalid-intensity", "negative jump intensity");

    // Bracket: S(lo) > u >= S(hi), doubling hi.
    double lo = 0.0;
    double s_lo = 1.0;
    double hi = rate0 > 0.0 ? -log_u / rate0 : 1.0;
    double s_hi = 0.0;
    for (;;) {
        hi = std::min(hi, kMaxHolding);
        s_hi = eval(hi);
        if (s_hi > s_lo + 1e-12) {
            throw_numerical("invalid-intensity", "survival function increased along the flow");
        }
        if (s_hi <= u) break;
        if (hi >= kMaxHolding) {
            throw_numerical("holding-time-overflow", "no jump within the holding-time cap");
        }
        lo = hi;
        s_lo = s_hi;
        hi *= 2.0;
    }

    // Safeguarded Newton on g(h) = log S(h) − log u, which is decreasing.
    double h = (s_hi > 0.0)
                   ? lo + (hi - lo) * (std::log(s_lo) - log_u) / (std::log(s_lo) - std::log(s_hi))
                   : 0.5 * (lo + hi);
    double s = s_hi;
    for (int iter = 0; iter < 200; ++iter) {
        s = eval(h);
        if (s > 0.0 && std::abs(s - u) <= 1e-14 + 1e-12 * u) break;
        if (s > u) {
            lo = h;
        } else {
            hi = h;
        }
        if (hi - lo <= 1e-15 * std::max(1.0, h)) break;
        double next = 0.5 * (lo + hi);
        if (s > 0.0) {
            const double ds = -v.dot(bd.exit.transpose());  // S'(h) = v C 1
            if (ds > 1e-12 * s) {
                throw_numerical("invalid-intensity", "survival function increased along the flow");
            }
            if (ds < 0.0) {
                const double newton = h - (std::log(s) - log_u) * s / ds;
                if (newton > lo && newton < hi) next = newton;
            }
        }
        h = next;
    }
    if (!(s > 0.0)) throw_numerical("orbit-degenerate", "survival underflow at the jump time");

    OrbitState flowed{state.regime, state.block, RowVector::Zero(state.a.size())};
    flowed.a.segment(bd.offset, m) = v / s;
    return {h, std::move(flowed)};
}

const std::vector<JumpTarget>& OrbitDynamics::targets(const OrbitState& state) const {
    return block(state).targets;
}

std::vector<double> OrbitDynamics::jump_intensities(const OrbitState& state) const {
    const auto& bd = block(state);
    const RowVector a = state.a.segment(bd.offset, bd.generator.rows());
    std::vector<double> out;
    out.reserve(bd.targets.size());
    for (const auto& t : bd.targets) {
        const double w = a.dot(t.row_sums.transpose());
        if (w < -kIntensityTol) {
            throw_numerical("invalid-intensity", "negative block intensity toward " +
                                                     std::string(to_string(t.regime)) + " block " +
                                                     std::to_string(t.block));
        }
        out.push_back(std::max(0.0, w));
    }
    return out;
}

OrbitState OrbitDynamics::jump(const OrbitState& state, double u) const {
    const auto& bd = block(state);
    const std::vector<double> w = jump_intensities(state);
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw_numerical("orbit-degenerate", "total jump intensity is not positive");

    const double threshold = u * total;
    std::size_t pick = w.size();
    double cumulative = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
        if (w[c] <= 0.0) continue;
        pick = c;
        cumulative += w[c];
        if (threshold < cumulative) break;
    }
    const auto& target = bd.targets[pick];
    const RowVector landed = state.a.segment(bd.offset, bd.generator.rows()) * target.block_matrix;
    const double mass = landed.sum();
    if (!(mass > 0.0)) throw_numerical("orbit-degenerate", "landing point has zero mass");

    const auto& s = model_->structure();
    OrbitState out{target.regime, target.block, RowVector::Zero(s.eta(target.regime))};
    out.a.segment(s.offset(target.regime, target.block), landed.size()) = landed / mass;
    return out;
}

OrbitState flow_step(const OrbitState& state, double dt, const RapFluidModel& model) {
    return OrbitDynamics(model).flow(state, dt);
}

double sample_holding_time(const OrbitState& state, Rng& rng, const RapFluidModel& model) {
    return OrbitDynamics(model).holding_time(state, rng.uniform()).time;
}

OrbitState sample_jump(const OrbitState& state, Rng& rng, const RapFluidModel& model) {
    return OrbitDynamics(model).jump(state, rng.uniform());
}

PathRecord simulate_path(const RapFluidModel& model, const OrbitState& start, double horizon,
                         bool regulated, std::uint64_t seed, double record_dt) {
    if (!(horizon > 0.0)) throw_input("bad-argument", "horizon must be positive");
    const OrbitDynamics dyn(model);
    Rng rng(seed, 0);

    PathRecord path;
    path.regulated = regulated;
    double t = 0.0;
    double level = 0.0;
    OrbitState state = start;
    path.events.push_back({EventKind::Start, t, level, state});
    double next_grid = record_dt > 0.0 ? record_dt : std::numeric_limits<double>::infinity();

    for (;;) {
        auto holding = dyn.holding_time(state, rng.uniform());
        const double end = t + holding.time;
        const double stop = std::min(end, horizon);
        while (next_grid <= stop) {
            path.events.push_back({EventKind::Grid, next_grid,
                                   advance_level(level, state.regime, next_grid - t, regulated),
                                   dyn.flow(state, next_grid - t)});
            next_grid += record_dt;
        }
        if (end >= horizon) {
            path.events.push_back({EventKind::End, horizon,
                                   advance_level(level, state.regime, horizon - t, regulated),
                                   dyn.flow(state, horizon - t)});
            break;
        }
        level = advance_level(level, state.regime, holding.time, regulated);
        t = end;
        state = dyn.jump(holding.flowed, rng.uniform());
        ++path.jumps;
        path.events.push_back({EventKind::Jump, t, level, state});
    }
    return path;
}

}  // namespace rapflow
