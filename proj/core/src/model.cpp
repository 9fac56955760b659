#include "rapflow/model.hpp"

#include "rapflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace rapflow {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::string d_name(Regime k, Regime ell) {
    return "D[" + std::string(to_string(k)) + "," + std::string(to_string(ell)) + "]";
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw_input("dimension-mismatch", what + " has shape " + shape(m) + ", expected " +
                                              std::to_string(rows) + "x" + std::to_string(cols));
    }
}

bool regime_present(const BlockStructure& s, Regime k) { return s.num_blocks(k) > 0; }

}  // namespace

std::string_view to_string(Regime k) {
    switch (k) {
        case Regime::Plus: return "plus";
        case Regime::Minus: return "minus";
        case Regime::Zero: return "zero";
    }
    return "?";
}

std::optional<Regime> parse_regime(std::string_view text) {
    if (text == "+" || text == "plus" || text == "Plus") return Regime::Plus;
    if (text == "-" || text == "minus" || text == "Minus") return Regime::Minus;
    if (text == "0" || text == "zero" || text == "Zero") return Regime::Zero;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// BlockStructure

BlockStructure::BlockStructure(std::vector<std::size_t> plus, std::vector<std::size_t> minus,
                               std::vector<std::size_t> zero)
    : sizes_{std::move(plus), std::move(minus), std::move(zero)} {
    if (sizes_[0].empty() || sizes_[1].empty()) {
        throw_input("bad-structure", "regimes plus and minus need at least one block each");
    }
    for (Regime k : kAllRegimes) {
        auto& offs = offsets_[index_of(k)];
        Eigen::Index running = 0;
        for (std::size_t m : sizes_[index_of(k)]) {
            if (m == 0) {
                throw_input("bad-structure", "block sizes must be >= 1 (regime " +
                                                 std::string(to_string(k)) + ")");
            }
            offs.push_back(running);
            running += static_cast<Eigen::Index>(m);
        }
        eta_[index_of(k)] = running;
    }
}

std::size_t BlockStructure::block_size(Regime k, std::size_t block) const {
    return sizes_[index_of(k)].at(block);
}

Eigen::Index BlockStructure::offset(Regime k, std::size_t block) const {
    return offsets_[index_of(k)].at(block);
}

std::size_t BlockStructure::block_of(Regime k, Eigen::Index coordinate) const {
    const auto& offs = offsets_[index_of(k)];
    if (coordinate < 0 || coordinate >= eta(k)) {
        throw_input("dimension-mismatch", "coordinate out of range for regime " +
                                              std::string(to_string(k)));
    }
    auto it = std::upper_bound(offs.begin(), offs.end(), coordinate);
    return static_cast<std::size_t>(std::distance(offs.begin(), it) - 1);
}

// ---------------------------------------------------------------------------
// RapFluidModel

RapFluidModel::RapFluidModel(BlockStructure structure, CMatrices c, DMatrices d,
                             std::vector<SeedPoint> seeds)
    : structure_(std::move(structure)), c_(std::move(c)), d_(std::move(d)), seeds_(std::move(seeds)) {
    for (Regime k : kAllRegimes) {
        const auto eta_k = structure_.eta(k);
        Matrix& ck = c_[index_of(k)];
        if (eta_k == 0 && ck.size() == 0) ck.resize(0, 0);
        expect_shape(ck, eta_k, eta_k, "C[" + std::string(to_string(k)) + "]");
        linalg::require_finite(ck, "C[" + std::string(to_string(k)) + "]");
        for (Regime ell : kAllRegimes) {
            Matrix& dkl = d_[index_of(k)][index_of(ell)];
            if (k == ell) {
                dkl.resize(0, 0);
                continue;
            }
            const auto eta_l = structure_.eta(ell);
            if ((eta_k == 0 || eta_l == 0) && dkl.size() == 0) dkl.resize(eta_k, eta_l);
            expect_shape(dkl, eta_k, eta_l, d_name(k, ell));
            linalg::require_finite(dkl, d_name(k, ell));
        }
    }
    for (const auto& seed : seeds_) {
        if (!regime_present(structure_, seed.regime) ||
            seed.block >= structure_.num_blocks(seed.regime) ||
            seed.a.size() != structure_.eta(seed.regime)) {
            throw_input("dimension-mismatch", "seed point does not fit the block structure");
        }
    }
}

const Matrix& RapFluidModel::d(Regime from, Regime to) const {
    if (from == to) throw_input("bad-regime", "D is only defined between distinct regimes");
    return d_[index_of(from)][index_of(to)];
}

Matrix RapFluidModel::gamma(Regime k) const {
    const Matrix& ck = c(k);
    Matrix g = Matrix::Zero(ck.rows(), ck.cols());
    for (std::size_t i = 0; i < structure_.num_blocks(k); ++i) {
        const auto off = structure_.offset(k, i);
        const auto m = static_cast<Eigen::Index>(structure_.block_size(k, i));
        g.block(off, off, m, m) = ck.block(off, off, m, m);
    }
    return g;
}

Eigen::Block<const Matrix> RapFluidModel::c_block(Regime k, std::size_t i, std::size_t j) const {
    const auto mi = static_cast<Eigen::Index>(structure_.block_size(k, i));
    const auto mj = static_cast<Eigen::Index>(structure_.block_size(k, j));
    return c(k).block(structure_.offset(k, i), structure_.offset(k, j), mi, mj);
}

Eigen::Block<const Matrix> RapFluidModel::d_block(Regime k, Regime ell, std::size_t i,
                                                  std::size_t j) const {
    const auto mi = static_cast<Eigen::Index>(structure_.block_size(k, i));
    const auto mj = static_cast<Eigen::Index>(structure_.block_size(ell, j));
    return d(k, ell).block(structure_.offset(k, i), structure_.offset(ell, j), mi, mj);
}

Matrix RapFluidModel::c_hat(Regime k, std::size_t i, std::size_t j) const {
    Matrix out = Matrix::Zero(structure_.eta(k), structure_.eta(k));
    const auto blk = c_block(k, i, j);
    out.block(structure_.offset(k, i), structure_.offset(k, j), blk.rows(), blk.cols()) = blk;
    return out;
}

Matrix RapFluidModel::d_hat(Regime k, Regime ell, std::size_t i, std::size_t j) const {
    Matrix out = Matrix::Zero(structure_.eta(k), structure_.eta(ell));
    const auto blk = d_block(k, ell, i, j);
    out.block(structure_.offset(k, i), structure_.offset(ell, j), blk.rows(), blk.cols()) = blk;
    return out;
}

bool RapFluidModel::operator==(const RapFluidModel& other) const {
    if (!(structure_ == other.structure_)) return false;
    for (Regime k : kAllRegimes) {
        if (c(k) != other.c(k)) return false;
        for (Regime ell : kAllRegimes) {
            if (k != ell && d(k, ell) != other.d(k, ell)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

// Smallest intensity met while flowing from `seed` on a uniform time grid.
// Returns -inf when the normalising denominator collapses.
double min_intensity_along_flow(const RapFluidModel& model, const SeedPoint& seed,
                                const ValidateOptions& opt) {
    const auto& s = model.structure();
    const Regime k = seed.regime;
    const std::size_t i = seed.block;
    const auto off = s.offset(k, i);
    const auto m = static_cast<Eigen::Index>(s.block_size(k, i));
    const Matrix cii = model.c_block(k, i, i);

    const double abscissa = linalg::spectral_abscissa(cii);
    const double horizon =
        abscissa < -1e-12 ? opt.horizon_factor / std::abs(abscissa) : opt.horizon_factor;
    const double dt = horizon / opt.grid_steps;
    const Matrix step = linalg::expm(cii, dt);

    RowVector a = seed.a.segment(off, m);
    double lowest = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= opt.grid_steps; ++n) {
        lowest = std::min(lowest, -(a * cii).sum());
        for (std::size_t j = 0; j < s.num_blocks(k); ++j) {
            if (j != i) lowest = std::min(lowest, (a * model.c_block(k, i, j)).sum());
        }
        for (Regime ell : kAllRegimes) {
            if (ell == k) continue;
            for (std::size_t j = 0; j < s.num_blocks(ell); ++j) {
                lowest = std::min(lowest, (a * model.d_block(k, ell, i, j)).sum());
            }
        }
        RowVector next = a * step;
        const double mass = next.sum();
        if (!(mass > 0.0) || !std::isfinite(mass)) return -std::numeric_limits<double>::infinity();
        a = next / mass;
    }
    return lowest;
}

}  // namespace

ValidationReport validate(const RapFluidModel& model, const ValidateOptions& opt) {
    ValidationReport report;
    const auto& s = model.structure();

    // (a) dimensions: the constructor already enforces them, so reaching this
    // point means they are consistent.
    report.checks.push_back({"dimensions", true, 0.0, "block sizes and matrix shapes agree"});

    // (b) row sums
    double worst_row = 0.0;
    for (Regime k : kAllRegimes) {
        if (s.eta(k) == 0) continue;
        ColVector r = model.c(k) * linalg::ones(s.eta(k));
        for (Regime ell : kAllRegimes) {
            if (ell != k && s.eta(ell) > 0) r += model.d(k, ell) * linalg::ones(s.eta(ell));
        }
        worst_row = std::max(worst_row, r.cwiseAbs().maxCoeff());
    }
    report.checks.push_back({"row-sums", worst_row <= opt.row_sum_tol, worst_row,
                             "max |C^k 1 + sum_l D^{kl} 1|"});

    // (c) stability of each C^k
    for (Regime k : kAllRegimes) {
        if (s.eta(k) == 0) continue;
        const double abscissa = linalg::spectral_abscissa(model.c(k));
        report.checks.push_back({"spectral-abscissa-" + std::string(to_string(k)), abscissa < 0.0,
                                 abscissa, "max Re(eig(C^k)) must be negative"});
    }

    // (d) intensities along flows from seed points
    std::vector<SeedPoint> seeds;
    if (opt.include_vertices) {
        for (Regime k : kAllRegimes) {
            for (std::size_t i = 0; i < s.num_blocks(k); ++i) {
                for (std::size_t c = 0; c < s.block_size(k, i); ++c) {
                    RowVector a = RowVector::Zero(s.eta(k));
                    a(s.offset(k, i) + static_cast<Eigen::Index>(c)) = 1.0;
                    seeds.push_back({k, i, a});
                }
            }
        }
    }
    seeds.insert(seeds.end(), model.seeds().begin(), model.seeds().end());
    seeds.insert(seeds.end(), opt.seeds.begin(), opt.seeds.end());

    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& seed : seeds) {
        if (seed.a.size() != s.eta(seed.regime) || seed.block >= s.num_blocks(seed.regime)) {
            throw_input("dimension-mismatch", "seed point does not fit the block structure");
        }
        lowest = std::min(lowest, min_intensity_along_flow(model, seed, opt));
    }
    std::ostringstream detail;
    detail << "min intensity over " << seeds.size() << " seed flows, " << opt.grid_steps
           << " grid steps each";
    report.checks.push_back(
        {"intensity-heuristic", lowest >= -opt.intensity_tol, lowest, detail.str()});

    report.assumptions = {
        "orbit state space bounded (not verifiable from matrices)",
        "state space minimal: contains eta^k linearly independent vectors (not verifiable)",
        "intensity nonnegativity checked only along flows from seed points",
    };
    return report;
}

// ---------------------------------------------------------------------------
// Constructors

RapFluidModel from_markov_jump(const Matrix& q, const std::vector<Regime>& regime_of_state,
                               const std::optional<BlockStructure>& blocks) {
    linalg::require_square(q, "generator");
    linalg::require_finite(q, "generator");
    const auto n = q.rows();
    if (static_cast<Eigen::Index>(regime_of_state.size()) != n) {
        throw_input("dimension-mismatch", "one regime label is needed per generator state");
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        const double diag = q(r, r);
        if (diag > 0.0) {
            throw_input("not-a-generator", "positive diagonal entry in row " + std::to_string(r));
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            if (c != r && q(r, c) < 0.0) {
                throw_input("not-a-generator", "negative off-diagonal entry at (" +
                                                   std::to_string(r) + "," + std::to_string(c) + ")");
            }
        }
        if (std::abs(q.row(r).sum()) > 1e-12 * std::max(1.0, std::abs(diag))) {
            throw_input("not-a-generator", "row " + std::to_string(r) + " does not sum to zero");
        }
    }

    std::array<std::vector<Eigen::Index>, 3> states;
    for (Eigen::Index r = 0; r < n; ++r) {
        states[index_of(regime_of_state[static_cast<std::size_t>(r)])].push_back(r);
    }
    auto single = [&](Regime k) {
        const auto count = states[index_of(k)].size();
        return count == 0 ? std::vector<std::size_t>{} : std::vector<std::size_t>{count};
    };
    BlockStructure structure = blocks ? *blocks
                                      : BlockStructure(single(Regime::Plus), single(Regime::Minus),
                                                       single(Regime::Zero));
    for (Regime k : kAllRegimes) {
        if (structure.eta(k) != static_cast<Eigen::Index>(states[index_of(k)].size())) {
            throw_input("dimension-mismatch", "block structure does not match the number of " +
                                                  std::string(to_string(k)) + " states");
        }
    }

    auto extract = [&](Regime from, Regime to) {
        const auto& rows = states[index_of(from)];
        const auto& cols = states[index_of(to)];
        Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = q(rows[r], cols[c]);
            }
        }
        return out;
    };

    RapFluidModel::CMatrices c;
    RapFluidModel::DMatrices d;
    for (Regime k : kAllRegimes) {
        c[index_of(k)] = extract(k, k);
        for (Regime ell : kAllRegimes) {
            if (k != ell) d[index_of(k)][index_of(ell)] = extract(k, ell);
        }
    }
    return RapFluidModel(std::move(structure), std::move(c), std::move(d));
}

namespace {

void check_me_phase(const RowVector& alpha, const Matrix& s, const std::string& what) {
    linalg::require_square(s, what + " S");
    linalg::require_finite(s, what + " S");
    if (alpha.size() != s.rows()) {
        throw_input("dimension-mismatch", what + " alpha length does not match S");
    }
    if (!alpha.allFinite() || std::abs(alpha.sum() - 1.0) > 1e-12) {
        throw_input("bad-me-parameters", what + " alpha must sum to 1");
    }
    if (linalg::spectral_abscissa(s) >= 0.0) {
        throw_input("bad-me-parameters", what + " S must have all eigenvalues in the open left "
                                                "half-plane");
    }
}

}  // namespace

RapFluidModel from_me_renewal(const RowVector& alpha_plus, const Matrix& s_plus,
                              const RowVector& alpha_minus, const Matrix& s_minus) {
    check_me_phase(alpha_plus, s_plus, "plus");
    check_me_phase(alpha_minus, s_minus, "minus");

    const ColVector exit_plus = -s_plus * linalg::ones(s_plus.rows());
    const ColVector exit_minus = -s_minus * linalg::ones(s_minus.rows());

    BlockStructure structure({static_cast<std::size_t>(s_plus.rows())},
                             {static_cast<std::size_t>(s_minus.rows())});
    RapFluidModel::CMatrices c{s_plus, s_minus, Matrix()};
    RapFluidModel::DMatrices d;
    d[index_of(Regime::Plus)][index_of(Regime::Minus)] = exit_plus * alpha_minus;
    d[index_of(Regime::Minus)][index_of(Regime::Plus)] = exit_minus * alpha_plus;
    std::vector<SeedPoint> seeds{{Regime::Plus, 0, alpha_plus}, {Regime::Minus, 0, alpha_minus}};
    return RapFluidModel(std::move(structure), std::move(c), std::move(d), std::move(seeds));
}

RapFluidModel from_markov_renewal_me(const std::map<RegimePair, Matrix>& routing,
                                     const std::map<Regime, std::vector<MePhase>>& phases) {
    std::array<std::vector<std::size_t>, 3> sizes;
    std::array<std::size_t, 3> count{0, 0, 0};
    for (const auto& [k, list] : phases) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            check_me_phase(list[i].alpha, list[i].s,
                           std::string(to_string(k)) + " phase " + std::to_string(i));
            sizes[index_of(k)].push_back(static_cast<std::size_t>(list[i].s.rows()));
        }
        count[index_of(k)] = list.size();
    }
    BlockStructure structure(sizes[0], sizes[1], sizes[2]);

    for (const auto& [key, p] : routing) {
        const auto [k, ell] = key;
        expect_shape(p, static_cast<Eigen::Index>(count[index_of(k)]),
                     static_cast<Eigen::Index>(count[index_of(ell)]),
                     "P[" + std::string(to_string(k)) + "," + std::string(to_string(ell)) + "]");
    }
    auto p_entry = [&](Regime k, Regime ell, std::size_t i, std::size_t j) {
        auto it = routing.find({k, ell});
        if (it == routing.end()) return 0.0;
        return it->second(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    };

    // The stacked routing matrix must be a transition probability matrix.
    for (Regime k : kAllRegimes) {
        for (std::size_t i = 0; i < count[index_of(k)]; ++i) {
            double row = 0.0;
            for (Regime ell : kAllRegimes) {
                for (std::size_t j = 0; j < count[index_of(ell)]; ++j) {
                    const double p = p_entry(k, ell, i, j);
                    if (!std::isfinite(p) || p < 0.0) {
                        throw_input("not-stochastic", "routing probabilities must be finite and "
                                                      "nonnegative");
                    }
                    row += p;
                }
            }
            if (std::abs(row - 1.0) > 1e-12) {
                std::ostringstream msg;
                msg << "routing row " << to_string(k) << "[" << i << "] sums to " << row;
                throw_input("not-stochastic", msg.str());
            }
            if (p_entry(k, k, i, i) != 0.0) {
                throw_input("not-stochastic", "self-transitions p^{kk}_{ii} cannot be represented "
                                              "by an orbit jump; fold them into S^k_i instead");
            }
        }
    }

    RapFluidModel::CMatrices c;
    RapFluidModel::DMatrices d;
    std::vector<SeedPoint> seeds;
    for (Regime k : kAllRegimes) {
        const auto eta_k = structure.eta(k);
        c[index_of(k)] = Matrix::Zero(eta_k, eta_k);
        for (Regime ell : kAllRegimes) {
            if (ell != k) d[index_of(k)][index_of(ell)] = Matrix::Zero(eta_k, structure.eta(ell));
        }
        const auto& list = count[index_of(k)] ? phases.at(k) : std::vector<MePhase>{};
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto off_i = structure.offset(k, i);
            const auto mi = list[i].s.rows();
            const ColVector exit = -list[i].s * linalg::ones(mi);
            c[index_of(k)].block(off_i, off_i, mi, mi) = list[i].s;
            for (Regime ell : kAllRegimes) {
                for (std::size_t j = 0; j < count[index_of(ell)]; ++j) {
                    const double p = p_entry(k, ell, i, j);
                    if (p == 0.0) continue;
                    const auto& target = phases.at(ell)[j];
                    const auto off_j = structure.offset(ell, j);
                    const auto mj = target.s.rows();
                    const Matrix jump = p * exit * target.alpha;
                    if (ell == k) {
                        c[index_of(k)].block(off_i, off_j, mi, mj) = jump;
                    } else {
                        d[index_of(k)][index_of(ell)].block(off_i, off_j, mi, mj) = jump;
                    }
                }
            }
            RowVector seed = RowVector::Zero(eta_k);
            seed.segment(off_i, mi) = list[i].alpha;
            seeds.push_back({k, i, seed});
        }
    }
    return RapFluidModel(std::move(structure), std::move(c), std::move(d), std::move(seeds));
}

// ---------------------------------------------------------------------------
// Censoring

CensoredModel censor_zero(const RapFluidModel& model) {
    CensoredModel out;
    out.c_plus = model.c(Regime::Plus);
    out.c_minus = model.c(Regime::Minus);
    out.d_plus_minus = model.d(Regime::Plus, Regime::Minus);
    out.d_minus_plus = model.d(Regime::Minus, Regime::Plus);
    out.c_zero = model.c(Regime::Zero);
    out.d_plus_zero = model.d(Regime::Plus, Regime::Zero);
    out.d_minus_zero = model.d(Regime::Minus, Regime::Zero);
    out.d_zero_plus = model.d(Regime::Zero, Regime::Plus);
    out.d_zero_minus = model.d(Regime::Zero, Regime::Minus);
    out.neg_c_zero_inv.resize(0, 0);
    if (!model.has_zero()) return out;

    Eigen::FullPivLU<Matrix> lu(-out.c_zero);
    if (!lu.isInvertible()) throw_numerical("singular-c0", "C0 is singular; cannot censor");
    if (linalg::spectral_abscissa(out.c_zero) >= 0.0) {
        throw_numerical("singular-c0", "C0 has an eigenvalue with nonnegative real part");
    }
    out.neg_c_zero_inv = lu.inverse();

    const Matrix through_plus = out.d_plus_zero * out.neg_c_zero_inv;
    const Matrix through_minus = out.d_minus_zero * out.neg_c_zero_inv;
    out.c_plus += through_plus * out.d_zero_plus;
    out.d_plus_minus += through_plus * out.d_zero_minus;
    out.c_minus += through_minus * out.d_zero_minus;
    out.d_minus_plus += through_minus * out.d_zero_plus;
    out.censored = true;
    return out;
}

}  // namespace rapflow
