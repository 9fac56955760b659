#include "rapflow/stationary.hpp"

#include "rapflow/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rapflow {

namespace {

constexpr double kRowSumTol = 1e-9;
constexpr double kAbscissaTol = 1e-9;
constexpr double kZeroEigenTol = 1e-7;

// Scale of U = C⁻ + D⁻⁺Ψ measured on its constituents; U itself is small by
// cancellation exactly when the zero eigenvalue exists.
double u_scale(const PassageSolution& p) {
    return linalg::inf_norm(p.matrices.c_minus) +
           linalg::inf_norm(p.matrices.d_minus_plus) * linalg::inf_norm(p.psi.psi);
}

}  // namespace

StabilityReport stability_check(const PassageSolution& p) {
    StabilityReport r;
    const auto& psi = p.psi;
    r.psi_converged = psi.converged;

    // An unconverged iterate is only known up to its error estimate, which
    // is large exactly at the null-recurrent boundary where the iteration
    // slows to a sublinear rate.
    const double margin = psi.converged ? 0.0
                          : std::isfinite(psi.error_estimate)
                              ? 10.0 * psi.error_estimate
                              : std::numeric_limits<double>::infinity();

    const auto eta_minus = psi.psi.cols();
    const ColVector row_sums = psi.psi * linalg::ones(eta_minus);
    r.psi_row_sum_error = (row_sums - linalg::ones(row_sums.size())).cwiseAbs().maxCoeff();
    r.row_sum_tol = kRowSumTol + margin;
    r.recurrent = r.psi_row_sum_error <= r.row_sum_tol;

    const double dmp_norm = linalg::inf_norm(p.matrices.d_minus_plus);
    r.abscissa_tol =
        kAbscissaTol * std::max(1.0, linalg::inf_norm(p.matrices.c_plus) +
                                         linalg::inf_norm(psi.psi) * dmp_norm) +
        margin * dmp_norm;
    r.k_abscissa = linalg::spectral_abscissa(p.gens.k);
    r.k_abscissa_zero = std::abs(r.k_abscissa) <= r.abscissa_tol;

    const double u_bound = kZeroEigenTol * u_scale(p) + margin * dmp_norm;
    r.u_zero_eigenvalues = linalg::count_zero_eigenvalues(p.gens.u, 1.0, u_bound);

    if (!r.psi_converged) {
        std::ostringstream msg;
        msg << "Psi iteration stopped after " << psi.iterations
            << " iterations without converging (error estimate " << psi.error_estimate << ")";
        r.notes.push_back(msg.str());
    }
    if (!r.recurrent) {
        std::ostringstream msg;
        msg << "Psi 1 != 1 (max deviation " << r.psi_row_sum_error
            << "): the level process drifts to +infinity";
        r.notes.push_back(msg.str());
    }
    if (r.k_abscissa_zero) {
        r.notes.push_back(r.recurrent ? "spectral abscissa of K is zero within tolerance: "
                                        "null-recurrent boundary"
                                      : "spectral abscissa of K is zero within tolerance");
    } else if (r.k_abscissa > 0.0) {
        r.notes.push_back("spectral abscissa of K is positive");
    }
    if (r.u_zero_eigenvalues != 1) {
        r.notes.push_back("U has " + std::to_string(r.u_zero_eigenvalues) +
                          " eigenvalue(s) at zero; a simple zero is required");
    }

    r.positive_recurrent = r.psi_converged && r.recurrent && !r.k_abscissa_zero &&
                           r.k_abscissa < 0.0 && r.u_zero_eigenvalues == 1;
    return r;
}

StationarySolution stationary_solve(const RapFluidModel& model, const StationaryOptions& opt) {
    StationarySolution sol;
    sol.passage = solve_passage(model, opt.psi);
    sol.stability = stability_check(sol.passage);
    if (!sol.stability.positive_recurrent) {
        std::string why;
        for (const auto& note : sol.stability.notes) why += (why.empty() ? "" : "; ") + note;
        throw_numerical("not-positive-recurrent", why);
    }

    const auto& m = sol.passage.matrices;
    const Matrix& psi = sol.psi();
    const Matrix& k = sol.k();
    const auto eta_plus = psi.rows();

    sol.v0 = linalg::left_null_vector(sol.u(), opt.eigen_tol, u_scale(sol.passage));

    const ColVector ones_plus = linalg::ones(eta_plus);
    if (m.has_zero()) {
        sol.zero_weight = (m.d_plus_zero + psi * m.d_minus_zero) * m.neg_c_zero_inv;
    } else {
        sol.zero_weight = Matrix::Zero(eta_plus, 0);
    }
    const ColVector zero_rows = sol.zero_weight.cols() > 0
                                    ? ColVector(sol.zero_weight * linalg::ones(sol.zero_weight.cols()))
                                    : ColVector::Zero(eta_plus);

    const Eigen::PartialPivLU<Matrix> k_lu(k);
    const RowVector entry = sol.v0 * m.d_minus_plus;  // orbit entering Z⁺ from the boundary

    // c₋ = (1 − v₀D⁻⁺K⁻¹(2·1 + [D⁺⁰ + ΨD⁻⁰](−C⁰)⁻¹1))⁻¹, using Ψ1 = 1.
    const ColVector weight_closed = 2.0 * ones_plus + zero_rows;
    const double lhs = (entry * k_lu.solve(weight_closed)).value();
    sol.c_minus = 1.0 / (1.0 - lhs);

    // Mass bookkeeping with the actual Ψ1 and the Z⁰ atom kept explicit.
    const ColVector weight = ones_plus + psi * linalg::ones(psi.cols()) + zero_rows;
    const double unit_density_mass = -(entry * k_lu.solve(weight)).value();
    double unit_zero_atom = 0.0;
    if (m.has_zero()) {
        const RowVector atom = sol.v0 * m.d_minus_zero * m.neg_c_zero_inv;
        unit_zero_atom = atom.sum();
        sol.boundary_zero = sol.c_minus * atom;
    } else {
        sol.boundary_zero = RowVector::Zero(0);
    }
    sol.density_mass = sol.c_minus * unit_density_mass;
    sol.total_mass = sol.c_minus * (1.0 + unit_zero_atom) + sol.density_mass;
    sol.normalization_residual = sol.total_mass - 1.0;
    sol.c_minus_with_zero_atom = 1.0 / (1.0 + unit_zero_atom + unit_density_mass);
    return sol;
}

StationaryDensity density_eval(const StationarySolution& sol, double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw_input("negative-level", "x must be finite and >= 0");
    StationaryDensity out;
    const auto& m = sol.passage.matrices;
    out.pi_plus = sol.c_minus * sol.v0 * m.d_minus_plus * linalg::expm(sol.k(), x);
    out.pi_minus = out.pi_plus * sol.psi();
    out.pi = out.pi_plus.sum() + out.pi_minus.sum();
    if (sol.has_zero()) {
        out.pi_zero = out.pi_plus * sol.zero_weight;
        out.pi += out.pi_zero.sum();
    }
    out.nonnegative = out.pi >= -1e-12;
    return out;
}

RegionMass density_mass(const StationarySolution& sol, double a, double b) {
    if (!(a >= 0.0) || !(b >= a)) throw_input("bad-interval", "need 0 <= a <= b");
    const auto& m = sol.passage.matrices;
    const Matrix& k = sol.k();
    const auto n = k.rows();
    const Matrix upper = std::isinf(b) ? Matrix::Zero(n, n) : linalg::expm(k, b);
    const Matrix lower = linalg::expm(k, a);
    // ∫_a^b e^{Kx} dx = K⁻¹(e^{Kb} − e^{Ka})
    const Matrix integral = k.partialPivLu().solve(Matrix(upper - lower));
    const RowVector base = sol.c_minus * sol.v0 * m.d_minus_plus * integral;

    RegionMass out;
    out.plus = base.sum();
    out.minus = (base * sol.psi()).sum();
    if (sol.has_zero()) out.zero = (base * sol.zero_weight).sum();
    return out;
}

}  // namespace rapflow
