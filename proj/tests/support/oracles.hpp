#pragma once

#include "rapflow/model.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using rapflow::Matrix;
using rapflow::RapFluidModel;
using rapflow::RowVector;

Matrix mat(std::initializer_list<std::initializer_list<double>> rows);
RowVector row(std::initializer_list<double> v);

// Reference models, assembled directly from their matrices.
RapFluidModel scalar_model(double up_exit, double down_exit);
RapFluidModel m1();
RapFluidModel m2();
RapFluidModel m3();
RapFluidModel m4();
// Alternating Erlang-2 renewal with phase rate `up` in Z+ and `down` in Z-.
RapFluidModel erlang2(double up = 1.0, double down = 1.0);
// Two blocks in Z+ (exponential, Erlang-2), one Erlang-2 block in Z-.
RapFluidModel markov_renewal();
// Three-state chain with D^{-0} != 0.
RapFluidModel zero_atom();

// e^{At} from Eigen's MatrixFunctions module.
Matrix expm(const Matrix& a, double t = 1.0);

// Smallest nonnegative root of d_mp ψ² + (c_p + c_m) ψ + d_pm = 0.
double scalar_psi(double c_plus, double c_minus, double d_plus_minus, double d_minus_plus);

double simpson(const std::function<double(double)>& f, double a, double b, int panels);
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-14);

// One-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
// Asymptotic 1% critical value.
double ks_critical_1pct(std::size_t n);

// Random conservative generator with off-diagonal rates in (0, scale).
Matrix random_generator(int n, std::mt19937_64& rng, double scale = 2.0);
Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

}  // namespace oracle
