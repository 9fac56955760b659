#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace rapflow {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using ColVector = Eigen::VectorXd;

namespace linalg {

inline constexpr double kResidualTol = 1e-10;
inline constexpr double kEigenTol = 1e-9;

ColVector ones(Eigen::Index n);

// Max absolute row sum; the infinity norm used for every residual here.
double inf_norm(const Matrix& a);
double inf_norm(const RowVector& v);

void require_square(const Matrix& a, std::string_view what);
void require_finite(const Matrix& a, std::string_view what);

// e^{A t} by scaling and squaring with a diagonal Padé approximant whose
// degree (3, 5, 7, 9 or 13) is chosen from the 1-norm of A t.
Matrix expm(const Matrix& a, double t = 1.0);

// Solves A X + X B = Q through the Kronecker system
// (I ⊗ A + Bᵀ ⊗ I) vec(X) = vec(Q). The factorisation is kept so that
// repeated right-hand sides with the same A and B only pay for the solve.
class SylvesterSolver {
public:
    SylvesterSolver(const Matrix& a, const Matrix& b, double separation_tol = 1e-12);

    Matrix solve(const Matrix& q) const;

    Eigen::Index rows() const { return m_; }
    Eigen::Index cols() const { return n_; }

private:
    Eigen::Index m_;
    Eigen::Index n_;
    Eigen::FullPivLU<Matrix> lu_;
};

Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& q);

// ‖A X + X B − Q‖∞
double sylvester_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& x);

Eigen::VectorXcd eigenvalues(const Matrix& a);

// Largest real part over the spectrum of A.
double spectral_abscissa(const Matrix& a);

// Number of eigenvalues with |Re λ| and |Im λ| both at most tol·scale.
// A negative scale means ‖A‖∞.
int count_zero_eigenvalues(const Matrix& a, double tol, double scale = -1.0);

// Row vector v with v M = 0 and v 1 = 1. M must have a simple zero
// eigenvalue. Tolerances are relative to `scale` (‖M‖∞ when negative); pass
// the norm of M's constituents when M itself is small by cancellation.
RowVector left_null_vector(const Matrix& m, double tol = 1e-7, double scale = -1.0);

}  // namespace linalg
}  // namespace rapflow
