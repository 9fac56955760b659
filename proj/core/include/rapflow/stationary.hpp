#pragma once

#include "rapflow/linalg.hpp"
#include "rapflow/model.hpp"
#include "rapflow/passage.hpp"

#include <string>
#include <vector>

namespace rapflow {

struct StabilityReport {
    bool psi_converged = false;
    double psi_row_sum_error = 0.0;  // ‖Ψ1 − 1‖∞
    // Tolerances actually used; widened by Ψ's error estimate when the
    // iteration stopped before converging.
    double row_sum_tol = 0.0;
    double abscissa_tol = 0.0;

    double k_abscissa = 0.0;
    bool k_abscissa_zero = false;  // indistinguishable from 0 at abscissa_tol
    int u_zero_eigenvalues = 0;

    bool recurrent = false;  // Ψ1 = 1
    bool positive_recurrent = false;
    std::vector<std::string> notes;
};

// Positive recurrence requires Ψ1 = 1, spectral_abscissa(K) < 0 and a simple
// zero eigenvalue of U.
StabilityReport stability_check(const PassageSolution& passage);

struct StationaryOptions {
    PsiOptions psi;
    double eigen_tol = 1e-7;
};

struct StationarySolution {
    PassageSolution passage;
    StabilityReport stability;

    RowVector v0;          // v₀U = 0, v₀1 = 1
    double c_minus = 0.0;  // P(Q = 0, A ∈ Z⁻)

    // [D⁺⁰ + ΨD⁻⁰](−C⁰)⁻¹, η⁺ × η⁰ (zero-width without a zero regime).
    Matrix zero_weight;
    // c₋ v₀ D⁻⁰(−C⁰)⁻¹: orbit mass sitting at Q = 0 inside Z⁰.
    RowVector boundary_zero;

    double density_mass = 0.0;  // ∫₀^∞ π(x) dx
    double total_mass = 0.0;    // c₋ + boundary_zero·1 + density_mass
    double normalization_residual = 0.0;
    // c₋ obtained by normalising with the Z⁰ boundary atom included; equals
    // c_minus whenever D⁻⁰ = 0.
    double c_minus_with_zero_atom = 0.0;

    const Matrix& psi() const { return passage.psi.psi; }
    const Matrix& k() const { return passage.gens.k; }
    const Matrix& u() const { return passage.gens.u; }
    bool has_zero() const { return zero_weight.cols() > 0; }
};

// Throws "not-positive-recurrent" when stability fails and
// "eigenzero-violation" when v₀ cannot be extracted.
StationarySolution stationary_solve(const RapFluidModel& model, const StationaryOptions& options = {});

struct StationaryDensity {
    RowVector pi_plus;
    RowVector pi_minus;
    RowVector pi_zero;  // empty without a zero regime
    double pi = 0.0;
    bool nonnegative = true;
};

// Densities at x > 0 (x → 0⁺ is the right limit; atoms are reported separately).
StationaryDensity density_eval(const StationarySolution& sol, double x);

struct RegionMass {
    double plus = 0.0;
    double minus = 0.0;
    double zero = 0.0;
    double total() const { return plus + minus + zero; }
};

// Stationary probability of Q ∈ (a, b), split by regime; b may be +inf.
RegionMass density_mass(const StationarySolution& sol, double a, double b);

}  // namespace rapflow
