#include "rapflow/passage.hpp"

#include "rapflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rapflow {

namespace {

void check_shapes(const Matrix& c_plus, const Matrix& c_minus, const Matrix& d_plus_minus,
                  const Matrix& d_minus_plus) {
    linalg::require_square(c_plus, "C+");
    linalg::require_square(c_minus, "C-");
    const auto np = c_plus.rows();
    const auto nm = c_minus.rows();
    if (d_plus_minus.rows() != np || d_plus_minus.cols() != nm || d_minus_plus.rows() != nm ||
        d_minus_plus.cols() != np) {
        throw_input("dimension-mismatch", "D+- must be eta+ x eta- and D-+ must be eta- x eta+");
    }
}

void check_stable(const Matrix& c, const char* what) {
    if (linalg::spectral_abscissa(c) >= 0.0) {
        throw_input("unstable-generator",
                    std::string(what) + " must have all eigenvalues in the open left half-plane");
    }
}

void check_nonnegative(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw_input("negative-level", "x must be finite and >= 0");
}

void check_alpha(const RowVector& alpha, Eigen::Index expected, const char* what) {
    if (alpha.size() != expected) {
        throw_input("dimension-mismatch", std::string(what) + " has length " +
                                              std::to_string(alpha.size()) + ", expected " +
                                              std::to_string(expected));
    }
}

}  // namespace

double psi_residual(const Matrix& c_plus, const Matrix& c_minus, const Matrix& d_plus_minus,
                    const Matrix& d_minus_plus, const Matrix& psi) {
    return linalg::inf_norm(
        Matrix(c_plus * psi + psi * c_minus + d_plus_minus + psi * d_minus_plus * psi));
}

PsiSolution psi_solve(const Matrix& c_plus, const Matrix& c_minus, const Matrix& d_plus_minus,
                      const Matrix& d_minus_plus, const PsiOptions& opt) {
    check_shapes(c_plus, c_minus, d_plus_minus, d_minus_plus);
    check_stable(c_plus, "C+");
    check_stable(c_minus, "C-");

    const linalg::SylvesterSolver solver(c_plus, c_minus);
    const double scale = std::max(1.0, linalg::inf_norm(c_plus) + linalg::inf_norm(c_minus));

    PsiSolution sol;
    sol.psi = Matrix::Zero(c_plus.rows(), c_minus.rows());
    double previous_step = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= opt.max_iter; ++n) {
        Matrix next = solver.solve(-d_plus_minus - sol.psi * d_minus_plus * sol.psi);
        if (!next.allFinite() || linalg::inf_norm(next) > opt.divergence_bound) {
            throw_numerical("psi-diverged", "iterate " + std::to_string(n) +
                                                " left the bounded region");
        }
        const double step = linalg::inf_norm(Matrix(next - sol.psi));
        sol.psi = std::move(next);
        sol.iterations = n;
        sol.last_step = step;
        if (opt.on_iterate) opt.on_iterate(n, sol.psi);

        const double ratio = step / previous_step;
        sol.error_estimate = (ratio < 1.0) ? step * ratio / (1.0 - ratio)
                                           : std::numeric_limits<double>::infinity();
        previous_step = step;

        // Below this floor neither quantity is resolvable in double precision.
        const double psi_norm = linalg::inf_norm(sol.psi);
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale *
                             (1.0 + psi_norm) * (1.0 + psi_norm);
        const double tol = std::max(opt.tol, floor);
        if (step <= tol) {
            sol.residual = psi_residual(c_plus, c_minus, d_plus_minus, d_minus_plus, sol.psi);
            if (sol.residual <= tol) {
                sol.converged = true;
                if (step == 0.0) sol.error_estimate = 0.0;
                return sol;
            }
        }
    }
    sol.residual = psi_residual(c_plus, c_minus, d_plus_minus, d_minus_plus, sol.psi);
    return sol;
}

PsiSolution psi_solve(const CensoredModel& m, const PsiOptions& opt) {
    PsiSolution sol = psi_solve(m.c_plus, m.c_minus, m.d_plus_minus, m.d_minus_plus, opt);
    sol.censored = m.censored;
    return sol;
}

Matrix psi_quadrature_oracle(const Matrix& c_plus, const Matrix& c_minus,
                             const Matrix& d_plus_minus, const Matrix& d_minus_plus, int n_iters,
                             int quad_steps) {
    check_shapes(c_plus, c_minus, d_plus_minus, d_minus_plus);
    check_stable(c_plus, "C+");
    check_stable(c_minus, "C-");
    if (n_iters < 1 || quad_steps < 2) {
        throw_input("bad-argument", "oracle needs n_iters >= 1 and quad_steps >= 2");
    }
    const int panels = quad_steps + (quad_steps % 2);
    const double slowest =
        std::max(linalg::spectral_abscissa(c_plus), linalg::spectral_abscissa(c_minus));
    const double horizon = 40.0 / std::abs(slowest);
    const double h = horizon / panels;

    const auto np = c_plus.rows();
    const auto nm = c_minus.rows();
    // vec(e^{C⁺y} M e^{C⁻y}) = (e^{C⁻ᵀy} ⊗ e^{C⁺y}) vec M, so the whole
    // integral is a single linear operator on vec M.
    Matrix op = Matrix::Zero(np * nm, np * nm);
    for (int j = 0; j <= panels; ++j) {
        const double y = j * h;
        const double w = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        const Matrix ep = linalg::expm(c_plus, y);
        const Matrix em = linalg::expm(c_minus, y);
        for (Eigen::Index b = 0; b < nm; ++b) {
            for (Eigen::Index a = 0; a < nm; ++a) {
                op.block(b * np, a * np, np, np) += (w * em(a, b)) * ep;
            }
        }
    }
    op *= h / 3.0;

    Matrix psi = Matrix::Zero(np, nm);
    for (int n = 0; n < n_iters; ++n) {
        const Matrix rhs = d_plus_minus + psi * d_minus_plus * psi;
        const Eigen::Map<const ColVector> vec_rhs(rhs.data(), rhs.size());
        const ColVector vec_psi = op * vec_rhs;
        psi = Eigen::Map<const Matrix>(vec_psi.data(), np, nm);
    }
    return psi;
}

RecordGenerators record_generators(const Matrix& c_plus, const Matrix& c_minus,
                                   const Matrix& d_plus_minus, const Matrix& d_minus_plus,
                                   const PsiSolution& psi) {
    check_shapes(c_plus, c_minus, d_plus_minus, d_minus_plus);
    if (psi.psi.rows() != c_plus.rows() || psi.psi.cols() != c_minus.rows()) {
        throw_input("dimension-mismatch", "Psi does not match the model dimensions");
    }
    return {c_minus + d_minus_plus * psi.psi, c_plus + psi.psi * d_minus_plus};
}

RecordGenerators record_generators(const CensoredModel& m, const PsiSolution& psi) {
    return record_generators(m.c_plus, m.c_minus, m.d_plus_minus, m.d_minus_plus, psi);
}

PassageSolution solve_passage(const RapFluidModel& model, const PsiOptions& options) {
    PassageSolution out;
    out.matrices = censor_zero(model);
    out.psi = psi_solve(out.matrices, options);
    out.gens = record_generators(out.matrices, out.psi);
    return out;
}

FirstReturn first_return(const RowVector& alpha, const PsiSolution& psi) {
    check_alpha(alpha, psi.psi.rows(), "alpha");
    if (std::abs(alpha.sum() - 1.0) > 1e-10) {
        throw_input("alpha-not-normalized", "alpha must satisfy alpha * 1 = 1");
    }
    FirstReturn out;
    out.vector = alpha * psi.psi;
    out.prob = out.vector.sum();
    out.prob_in_range = out.prob >= -1e-9 && out.prob <= 1.0 + 1e-9;
    return out;
}

RowVector downward_record(const RowVector& start, bool from_plus, double x,
                          const RecordGenerators& gens, const PsiSolution& psi) {
    check_nonnegative(x);
    RowVector beta;
    if (from_plus) {
        check_alpha(start, psi.psi.rows(), "start vector (plus)");
        beta = start * psi.psi;
    } else {
        check_alpha(start, gens.u.rows(), "start vector (minus)");
        beta = start;
    }
    return beta * linalg::expm(gens.u, x);
}

double level_hitting_prob(const RowVector& alpha, double x, const RecordGenerators& gens,
                          const PsiSolution& psi) {
    return downward_record(alpha, true, x, gens, psi).sum();
}

CrossingExpectations crossing_expectations(const RowVector& alpha, double x,
                                           const RecordGenerators& gens, const PsiSolution& psi) {
    check_nonnegative(x);
    check_alpha(alpha, gens.k.rows(), "alpha");
    CrossingExpectations out;
    out.up = alpha * linalg::expm(gens.k, x);
    out.down = out.up * psi.psi;
    return out;
}

ExitLaw::ExitLaw(RowVector alpha, Matrix c_k, Matrix d_kl)
    : alpha_(std::move(alpha)), c_k_(std::move(c_k)), d_kl_(std::move(d_kl)) {
    linalg::require_square(c_k_, "C^k");
    check_alpha(alpha_, c_k_.rows(), "alpha");
    if (d_kl_.rows() != c_k_.rows()) throw_input("dimension-mismatch", "D^{kl} rows != eta^k");
    Eigen::FullPivLU<Matrix> lu(-c_k_);
    if (!lu.isInvertible()) throw_numerical("singular-generator", "C^k is singular");
    mean_ = alpha_ * lu.inverse() * d_kl_;
}

RowVector ExitLaw::density(double t) const {
    check_nonnegative(t);
    return alpha_ * linalg::expm(c_k_, t) * d_kl_;
}

ExitLaw exit_law(const RowVector& alpha, Regime k, Regime ell, const RapFluidModel& model) {
    if (k == ell) throw_input("bad-regime", "exit law needs two distinct regimes");
    if (model.structure().eta(k) == 0 || model.structure().eta(ell) == 0) {
        throw_input("bad-regime", "regime not present in the model");
    }
    return ExitLaw(alpha, model.c(k), model.d(k, ell));
}

RowVector confined_mean(const RowVector& alpha, Regime k, double t, const RapFluidModel& model) {
    check_nonnegative(t);
    if (model.structure().eta(k) == 0) throw_input("bad-regime", "regime not present in the model");
    check_alpha(alpha, model.c(k).rows(), "alpha");
    return alpha * linalg::expm(model.c(k), t);
}

}  // namespace rapflow
