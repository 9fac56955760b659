#include "rapflow/linalg.hpp"

#include "rapflow/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace rapflow::linalg {

namespace {

// Higham (2005) degree thresholds on ‖A‖₁ for the [m/m] Padé approximant.
constexpr std::array<double, 5> kTheta = {
    1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
    2.097847961257068e0, 5.371920351148152e0};

constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

double one_norm(const Matrix& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

template <std::size_t N>
Matrix pade_low(const Matrix& a, const std::array<double, N>& b) {
    const auto n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    Matrix power = ident;
    Matrix u_even = Matrix::Zero(n, n);
    Matrix v = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < N; k += 2) {
        v += b[k] * power;
        u_even += b[k + 1] * power;
        power = power * a2;
    }
    const Matrix u = a * u_even;
    return (v - u).partialPivLu().solve(v + u);
}

Matrix pade13(const Matrix& a) {
    const auto& b = kPade13;
    const auto n = a.rows();
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = a * a;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const Matrix u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * ident);
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                     b[2] * a2 + b[0] * ident;
    return (v - u).partialPivLu().solve(v + u);
}

}  // namespace

ColVector ones(Eigen::Index n) { return ColVector::Ones(n); }

double inf_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double inf_norm(const RowVector& v) {
    if (v.size() == 0) return 0.0;
    return v.cwiseAbs().maxCoeff();
}

void require_square(const Matrix& a, std::string_view what) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw_input("not-square", std::string(what) + " must be a non-empty square matrix (got " +
                                      std::to_string(a.rows()) + "x" +
                                      std::to_string(a.cols()) + ")");
    }
}

void require_finite(const Matrix& a, std::string_view what) {
    if (!a.allFinite()) {
        throw_input("non-finite", std::string(what) + " contains NaN or Inf entries");
    }
}

Matrix expm(const Matrix& a, double t) {
    require_square(a, "expm argument");
    require_finite(a, "expm argument");
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw_input("negative-time", "expm requires a finite t >= 0");
    }
    const auto n = a.rows();
    if (t == 0.0) return Matrix::Identity(n, n);

    const Matrix at = a * t;
    if (n == 1) return Matrix::Constant(1, 1, std::exp(at(0, 0)));

    const double norm = one_norm(at);
    if (norm <= kTheta[0]) return pade_low(at, kPade3);
    if (norm <= kTheta[1]) return pade_low(at, kPade5);
    if (norm <= kTheta[2]) return pade_low(at, kPade7);
    if (norm <= kTheta[3]) return pade_low(at, kPade9);

    const int squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / kTheta[4]))));
    Matrix result = pade13(at / std::ldexp(1.0, squarings));
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

SylvesterSolver::SylvesterSolver(const Matrix& a, const Matrix& b, double separation_tol)
    : m_(a.rows()), n_(b.rows()) {
    require_square(a, "Sylvester A");
    require_square(b, "Sylvester B");
    require_finite(a, "Sylvester A");
    require_finite(b, "Sylvester B");

    // A X + X B = Q is singular exactly when spec(A) ∩ spec(−B) ≠ ∅.
    const Eigen::VectorXcd ea = eigenvalues(a);
    const Eigen::VectorXcd eb = eigenvalues(b);
    const double scale = std::max(1.0, inf_norm(a) + inf_norm(b));
    for (Eigen::Index i = 0; i < ea.size(); ++i) {
        for (Eigen::Index j = 0; j < eb.size(); ++j) {
            if (std::abs(ea(i) + eb(j)) <= separation_tol * scale) {
                throw_numerical("sylvester-singular",
                                "A and -B share an eigenvalue; the Sylvester equation has no "
                                "unique solution");
            }
        }
    }

    const Matrix ident_m = Matrix::Identity(m_, m_);
    const Matrix ident_n = Matrix::Identity(n_, n_);
    Matrix kron(m_ * n_, m_ * n_);
    kron.setZero();
    // Column-major vec: vec(A X) = (I_n ⊗ A) vec X, vec(X B) = (Bᵀ ⊗ I_m) vec X.
    for (Eigen::Index j = 0; j < n_; ++j) {
        kron.block(j * m_, j * m_, m_, m_) += a;
        for (Eigen::Index l = 0; l < n_; ++l) {
            kron.block(j * m_, l * m_, m_, m_) += b(l, j) * ident_m;
        }
    }
    lu_.compute(kron);
    if (!lu_.isInvertible()) {
        throw_numerical("sylvester-singular", "Kronecker system is numerically singular");
    }
}

Matrix SylvesterSolver::solve(const Matrix& q) const {
    if (q.rows() != m_ || q.cols() != n_) {
        throw_input("dimension-mismatch", "Sylvester right-hand side has wrong shape");
    }
    const Eigen::Map<const ColVector> rhs(q.data(), q.size());
    const ColVector x = lu_.solve(rhs);
    return Eigen::Map<const Matrix>(x.data(), m_, n_);
}

Matrix sylvester_solve(const Matrix& a, const Matrix& b, const Matrix& q) {
    return SylvesterSolver(a, b).solve(q);
}

double sylvester_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& x) {
    return inf_norm(Matrix(a * x + x * b - q));
}

Eigen::VectorXcd eigenvalues(const Matrix& a) {
    require_square(a, "eigenvalue argument");
    require_finite(a, "eigenvalue argument");
    Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw_numerical("eigen-no-converge", "real Schur iteration did not converge");
    }
    return solver.eigenvalues();
}

double spectral_abscissa(const Matrix& a) { return eigenvalues(a).real().maxCoeff(); }

int count_zero_eigenvalues(const Matrix& a, double tol, double scale) {
    const Eigen::VectorXcd ev = eigenvalues(a);
    const double bound = tol * (scale < 0.0 ? inf_norm(a) : scale);
    int count = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i).real()) <= bound && std::abs(ev(i).imag()) <= bound) ++count;
    }
    return count;
}

RowVector left_null_vector(const Matrix& m, double tol, double scale) {
    require_square(m, "null-vector argument");
    if (scale < 0.0) scale = inf_norm(m);
    const int zeros = count_zero_eigenvalues(m, tol, scale);
    if (zeros != 1) {
        throw_numerical("eigenzero-violation",
                        "expected a simple zero eigenvalue, found " + std::to_string(zeros) +
                            " eigenvalue(s) within tolerance of zero");
    }
    const auto n = m.rows();
    // Stack Mᵀ v = 0 with 1ᵀ v = 1 and solve in the least-squares sense; the
    // system is consistent when the zero eigenvalue is simple.
    Matrix system(n + 1, n);
    system.topRows(n) = m.transpose();
    system.row(n).setOnes();
    ColVector rhs = ColVector::Zero(n + 1);
    rhs(n) = 1.0;
    const ColVector solution = system.colPivHouseholderQr().solve(rhs);
    RowVector v = solution.transpose();
    v /= v.sum();

    if (inf_norm(RowVector(v * m)) > std::max(tol * scale, 1e-14)) {
        throw_numerical("eigenzero-violation", "left null vector residual exceeds tolerance");
    }
    return v;
}

}  // namespace rapflow::linalg
