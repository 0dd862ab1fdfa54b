// types.hpp — Shared matrix aliases, tolerance configuration, error types

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qdsf {

using Complex = std::complex<double>;

// Operators on the d-dimensional system Hilbert space.
using Matrix = Eigen::MatrixXcd;
// d^2 x d^2 matrices acting on column-stacked operators.
using Superop = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

struct Tolerances {
    double herm = 1e-12;      // Hermiticity residual
    double trace = 1e-12;     // unit-trace residual
    double psd = 1e-10;       // allowed negative-eigenvalue magnitude
    double eig = 1e-9;        // eigenpair residuals and simplicity margin
    double exp = 1e-10;       // semigroup propagation accuracy
    double faithful = 1e-12;  // smallest admissible state eigenvalue
    double bohr = 1e-9;       // relative width for frequency clustering
    double check = 1e-9;      // generic residual threshold in property checkers
};

// Numerical failures (degenerate dominant eigenvalue, non-unique kernel, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed model files or field-level validation failures.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Worker count for parallel kernels: QDSFLUCT_THREADS when set, otherwise
// hardware concurrency.
int default_thread_count();

} // namespace qdsf
