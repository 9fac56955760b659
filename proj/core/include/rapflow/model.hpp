#pragma once

#include "rapflow/linalg.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rapflow {

// Which affine family the orbit currently lives in; fixes the level slope.
enum class Regime : int { Plus = 0, Minus = 1, Zero = 2 };

inline constexpr std::array<Regime, 3> kAllRegimes = {Regime::Plus, Regime::Minus, Regime::Zero};

constexpr std::size_t index_of(Regime k) { return static_cast<std::size_t>(k); }

// Level slope of a regime. Only unit rates are supported; other rates reduce
// to these by a random time change.
constexpr double level_rate(Regime k) {
    switch (k) {
        case Regime::Plus: return 1.0;
        case Regime::Minus: return -1.0;
        case Regime::Zero: return 0.0;
    }
    return 0.0;
}

std::string_view to_string(Regime k);
std::optional<Regime> parse_regime(std::string_view text);

// Per-regime partition of the orbit coordinates into contiguous blocks.
class BlockStructure {
public:
    BlockStructure() = default;
    BlockStructure(std::vector<std::size_t> plus, std::vector<std::size_t> minus,
                   std::vector<std::size_t> zero = {});

    std::size_t num_blocks(Regime k) const { return sizes_[index_of(k)].size(); }
    std::size_t block_size(Regime k, std::size_t block) const;
    Eigen::Index offset(Regime k, std::size_t block) const;
    Eigen::Index eta(Regime k) const { return eta_[index_of(k)]; }
    const std::vector<std::size_t>& sizes(Regime k) const { return sizes_[index_of(k)]; }
    bool has_zero() const { return !sizes_[index_of(Regime::Zero)].empty(); }

    // Block whose coordinate range contains `coordinate`.
    std::size_t block_of(Regime k, Eigen::Index coordinate) const;

    bool operator==(const BlockStructure&) const = default;

private:
    std::array<std::vector<std::size_t>, 3> sizes_;
    std::array<std::vector<Eigen::Index>, 3> offsets_;
    std::array<Eigen::Index, 3> eta_{0, 0, 0};
};

// A known point of the orbit state space, e.g. an initial vector α of a
// matrix-exponential phase. Used by the intensity heuristic and as default
// starting points.
struct SeedPoint {
    Regime regime = Regime::Plus;
    std::size_t block = 0;
    RowVector a;  // full η^k coordinates
};

class RapFluidModel {
public:
    using CMatrices = std::array<Matrix, 3>;
    using DMatrices = std::array<std::array<Matrix, 3>, 3>;

    // Matrices involving an absent zero regime may be left empty; they are
    // resized to the correct zero-width shapes. Any other shape mismatch
    // throws "dimension-mismatch".
    RapFluidModel(BlockStructure structure, CMatrices c, DMatrices d,
                  std::vector<SeedPoint> seeds = {});

    const BlockStructure& structure() const { return structure_; }
    bool has_zero() const { return structure_.has_zero(); }

    const Matrix& c(Regime k) const { return c_[index_of(k)]; }
    const Matrix& d(Regime from, Regime to) const;

    // Block-diagonal part of C^k: the generator of the deterministic flow.
    Matrix gamma(Regime k) const;

    // The (i, j) sub-blocks C^k_{ij} and D^{kℓ}_{ij}.
    Eigen::Block<const Matrix> c_block(Regime k, std::size_t i, std::size_t j) const;
    Eigen::Block<const Matrix> d_block(Regime k, Regime ell, std::size_t i, std::size_t j) const;

    // Zero-padded views Ĉ^k_{ij} (η^k×η^k) and D̂^{kℓ}_{ij} (η^k×η^ℓ).
    Matrix c_hat(Regime k, std::size_t i, std::size_t j) const;
    Matrix d_hat(Regime k, Regime ell, std::size_t i, std::size_t j) const;

    const std::vector<SeedPoint>& seeds() const { return seeds_; }

    bool operator==(const RapFluidModel& other) const;

private:
    BlockStructure structure_;
    CMatrices c_;
    DMatrices d_;
    std::vector<SeedPoint> seeds_;
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    double value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    // Conditions that cannot be decided from the matrices alone.
    std::vector<std::string> assumptions;

    bool all_passed() const;
    const ValidationCheck* find(std::string_view name) const;
};

struct ValidateOptions {
    // Extra orbit points to flow from; when `include_vertices` is false they
    // replace the canonical block vertices.
    std::vector<SeedPoint> seeds;
    bool include_vertices = true;
    int grid_steps = 200;
    double horizon_factor = 20.0;
    double row_sum_tol = 1e-10;
    double intensity_tol = 1e-9;
};

// Checks what can be checked: dimensions (hard error), the row-sum
// condition, stability of every C^k, and nonnegativity of all intensities
// along deterministic flows started from seed points.
ValidationReport validate(const RapFluidModel& model, const ValidateOptions& options = {});

// Sub-blocks of a conservative generator grouped by regime. With no block
// structure each regime forms a single block.
RapFluidModel from_markov_jump(const Matrix& generator, const std::vector<Regime>& regime_of_state,
                               const std::optional<BlockStructure>& blocks = std::nullopt);

// Alternating matrix-exponential renewal: C^k = S^k, D^{kℓ} = (−S^k 1) α^ℓ.
RapFluidModel from_me_renewal(const RowVector& alpha_plus, const Matrix& s_plus,
                              const RowVector& alpha_minus, const Matrix& s_minus);

struct MePhase {
    RowVector alpha;
    Matrix s;
};

using RegimePair = std::pair<Regime, Regime>;

// Markov renewal process with matrix-exponential sojourns. `routing` holds
// the blocks P^{kℓ} of the stacked transition matrix (missing blocks are
// zero); `phases` holds (α^k_i, S^k_i) for every block i of regime k.
RapFluidModel from_markov_renewal_me(const std::map<RegimePair, Matrix>& routing,
                                     const std::map<Regime, std::vector<MePhase>>& phases);

// Matrices with the zero regime censored out. When the model has no zero
// regime the starred matrices are the originals and `censored` is false.
struct CensoredModel {
    Matrix c_plus;
    Matrix c_minus;
    Matrix d_plus_minus;
    Matrix d_minus_plus;
    bool censored = false;

    // Retained zero-regime blocks (zero-width when absent).
    Matrix c_zero;
    Matrix d_plus_zero;
    Matrix d_minus_zero;
    Matrix d_zero_plus;
    Matrix d_zero_minus;
    Matrix neg_c_zero_inv;  // (−C⁰)⁻¹

    bool has_zero() const { return c_zero.rows() > 0; }
};

// C^{k*} = C^k + D^{k0}(−C⁰)⁻¹D^{0k},  D^{kℓ*} = D^{kℓ} + D^{k0}(−C⁰)⁻¹D^{0ℓ}.
CensoredModel censor_zero(const RapFluidModel& model);

}  // namespace rapflow
