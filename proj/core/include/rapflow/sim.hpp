#pragma once

#include "rapflow/linalg.hpp"
#include "rapflow/model.hpp"
#include "rapflow/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace rapflow {

// State of the orbit process: regime, active block and the full η^k row
// vector (zero outside the active block, summing to one).
struct OrbitState {
    Regime regime = Regime::Plus;
    std::size_t block = 0;
    RowVector a;
};

// Builds a state from a full-length vector, locating its block from the
// support. Throws if the vector straddles blocks or is not normalised.
OrbitState make_state(const RapFluidModel& model, Regime regime, const RowVector& a);

// One possible jump destination from a given block.
struct JumpTarget {
    Regime regime = Regime::Plus;
    std::size_t block = 0;
    Matrix block_matrix;  // C^k_{ij} or D^{kℓ}_{ij}
    ColVector row_sums;   // block_matrix · 1
};

// Per-block data of a model, precomputed once and shared read-only by all
// simulated paths.
class OrbitDynamics {
public:
    explicit OrbitDynamics(const RapFluidModel& model);

    const RapFluidModel& model() const { return *model_; }

    // A_{t+dt} = A_t e^{Γ dt} / (A_t e^{Γ dt} 1); "orbit-degenerate" if the
    // denominator is not positive.
    OrbitState flow(const OrbitState& state, double dt) const;

    // S(h) = A_t e^{Γ h} 1, the probability of no jump in [t, t + h].
    double survival(const OrbitState& state, double h) const;

    struct Holding {
        double time = 0.0;
        OrbitState flowed;  // state just before the jump
    };

    // Solves S(h) = u by bracketing then safeguarded Newton on log S.
    Holding holding_time(const OrbitState& state, double u) const;

    const std::vector<JumpTarget>& targets(const OrbitState& state) const;

    // Intensities a·M·1 for every target of the state's block, in the same
    // order as targets(); "invalid-intensity" if any is below −1e−9.
    std::vector<double> jump_intensities(const OrbitState& state) const;

    // Picks a target with probability proportional to its intensity using
    // u ∈ (0,1) and lands at a M / (a M 1).
    OrbitState jump(const OrbitState& state, double u) const;

private:
    struct BlockData {
        Eigen::Index offset = 0;
        Matrix generator;  // C^k_{ii}
        ColVector exit;    // −C^k_{ii} 1
        std::vector<JumpTarget> targets;
    };

    const BlockData& block(const OrbitState& state) const;

    const RapFluidModel* model_;
    std::array<std::vector<BlockData>, 3> blocks_;
};

OrbitState flow_step(const OrbitState& state, double dt, const RapFluidModel& model);
double sample_holding_time(const OrbitState& state, Rng& rng, const RapFluidModel& model);
OrbitState sample_jump(const OrbitState& state, Rng& rng, const RapFluidModel& model);

enum class EventKind { Start, Jump, Grid, End };

struct PathEvent {
    EventKind kind = EventKind::Start;
    double time = 0.0;
    double level = 0.0;  // R_t, or Q_t on regulated paths
    OrbitState state;
};

struct PathRecord {
    std::vector<PathEvent> events;
    bool regulated = false;
    std::size_t jumps = 0;
};

// Event-driven simulation on [0, horizon]. Jump epochs are recorded always;
// grid points every `record_dt` when positive. The path is a pure function
// of (model, start, horizon, regulated, seed, record_dt).
PathRecord simulate_path(const RapFluidModel& model, const OrbitState& start, double horizon,
                         bool regulated, std::uint64_t seed, double record_dt = 0.0);

}  // namespace rapflow
