#pragma once

#include "rapflow/linalg.hpp"
#include "rapflow/model.hpp"

#include <functional>

namespace rapflow {

struct PsiOptions {
    double tol = 1e-12;
    int max_iter = 10000;
    // Any iterate with ‖Ψₙ‖∞ above this is treated as divergence.
    double divergence_bound = 1e6;
    // Called with (n, Ψₙ) after every iterate; used by tests.
    std::function<void(int, const Matrix&)> on_iterate;
};

// First-return matrix: E_α[A_{τ₋} 1{τ₋ < ∞}] = α Ψ.
struct PsiSolution {
    Matrix psi;
    int iterations = 0;
    double residual = 0.0;  // ‖C⁺Ψ + ΨC⁻ + D⁺⁻ + ΨD⁻⁺Ψ‖∞
    double last_step = 0.0;  // ‖Ψₙ − Ψₙ₋₁‖∞
    // Geometric-tail estimate of ‖Ψ − Ψₙ‖∞ from the last two steps; +inf when
    // the steps are not contracting.
    double error_estimate = 0.0;
    bool converged = false;
    bool censored = false;
};

double psi_residual(const Matrix& c_plus, const Matrix& c_minus, const Matrix& d_plus_minus,
                    const Matrix& d_minus_plus, const Matrix& psi);

// Minimal solution of the quadratic matrix equation, obtained from Ψ₀ = 0 by
//   C⁺Ψₙ₊₁ + Ψₙ₊₁C⁻ = −D⁺⁻ − ΨₙD⁻⁺Ψₙ.
// Stops once both the step and the residual are at most tol (raised to a
// rounding floor when tol is below what double precision can resolve).
PsiSolution psi_solve(const Matrix& c_plus, const Matrix& c_minus, const Matrix& d_plus_minus,
                      const Matrix& d_minus_plus, const PsiOptions& options = {});

// Same recursion on the (possibly censored) matrices.
PsiSolution psi_solve(const CensoredModel& matrices, const PsiOptions& options = {});

// Test oracle: the n-th iterate computed from the integral form
//   Ψₙ = ∫₀^∞ e^{C⁺y}(D⁺⁻ + Ψₙ₋₁D⁻⁺Ψₙ₋₁)e^{C⁻y} dy
// with composite Simpson on [0, 40/|abscissa|]. Shares nothing with the
// Sylvester path except the matrix exponential.
Matrix psi_quadrature_oracle(const Matrix& c_plus, const Matrix& c_minus,
                             const Matrix& d_plus_minus, const Matrix& d_minus_plus, int n_iters,
                             int quad_steps);

// U = C⁻ + D⁻⁺Ψ drives the downward record process, K = C⁺ + ΨD⁻⁺ the
// expected orbit sums at level crossings.
struct RecordGenerators {
    Matrix u;
    Matrix k;
};

RecordGenerators record_generators(const Matrix& c_plus, const Matrix& c_minus,
                                   const Matrix& d_plus_minus, const Matrix& d_minus_plus,
                                   const PsiSolution& psi);
RecordGenerators record_generators(const CensoredModel& matrices, const PsiSolution& psi);

// Everything the first-passage formulas need, computed once. Models with a
// zero regime are censored first.
struct PassageSolution {
    CensoredModel matrices;
    PsiSolution psi;
    RecordGenerators gens;
};

PassageSolution solve_passage(const RapFluidModel& model, const PsiOptions& options = {});

struct FirstReturn {
    RowVector vector;  // α Ψ
    double prob = 0.0;  // α Ψ 1
    // False when prob falls outside [−1e−9, 1 + 1e−9].
    bool prob_in_range = true;
};

FirstReturn first_return(const RowVector& alpha, const PsiSolution& psi);

// E[O_x 1{τ₋ˣ < ∞}]: β e^{Ux} from Z⁻, α Ψ e^{Ux} from Z⁺.
RowVector downward_record(const RowVector& start, bool from_plus, double x,
                          const RecordGenerators& gens, const PsiSolution& psi);

// Probability of ever reaching level −x from Z⁺: α Ψ e^{Ux} 1.
double level_hitting_prob(const RowVector& alpha, double x, const RecordGenerators& gens,
                          const PsiSolution& psi);

struct CrossingExpectations {
    RowVector up;    // α e^{Kx}
    RowVector down;  // α e^{Kx} Ψ
};

CrossingExpectations crossing_expectations(const RowVector& alpha, double x,
                                           const RecordGenerators& gens, const PsiSolution& psi);

// Law of the orbit at the first exit from regime k into regime ℓ.
class ExitLaw {
public:
    ExitLaw(RowVector alpha, Matrix c_k, Matrix d_kl);

    // α e^{C^k t} D^{kℓ}
    RowVector density(double t) const;
    // α (−C^k)⁻¹ D^{kℓ}
    const RowVector& mean() const { return mean_; }

private:
    RowVector alpha_;
    Matrix c_k_;
    Matrix d_kl_;
    RowVector mean_;
};

ExitLaw exit_law(const RowVector& alpha, Regime k, Regime ell, const RapFluidModel& model);

// E_α[A_t 1{A_s ∈ Z^k for all s ≤ t}] = α e^{C^k t}.
RowVector confined_mean(const RowVector& alpha, Regime k, double t, const RapFluidModel& model);

}  // namespace rapflow
