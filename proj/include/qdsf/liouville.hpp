// liouville.hpp — Dense linear algebra on operators and superoperators:
// vectorization, Hilbert-Schmidt pairing, modular structure, spectral analysis
// of non-Hermitian superoperators, semigroup propagation.

#pragma once

#include <utility>
#include <vector>

#include "qdsf/types.hpp"

namespace qdsf {

// Column-stacking vectorization; vec(A X B) = (B^T ⊗ A) vec(X).
Vector vectorize(const Matrix& x);
Matrix devectorize(const Vector& v, Eigen::Index dim);

// tr(X† Y); equals the standard inner product of the vectorized operators.
Complex hs_inner(const Matrix& x, const Matrix& y);

// Superoperator realizing X ↦ A X B.
Superop sandwich(const Matrix& a, const Matrix& b);

Superop superop_identity(Eigen::Index dim);
Matrix apply_superop(const Superop& s, const Matrix& x);

// Adjoint w.r.t. the Hilbert-Schmidt pairing.
Superop adjoint_superop(const Superop& s);

// Adjoint w.r.t. ⟨X|Y⟩_ρ = tr(ρ X† Y); realized as S^ρ(X) = S†(Xρ)ρ^{-1}.
Superop rho_adjoint(const Superop& s, const Matrix& rho,
                    const Tolerances& tol = {});

bool is_hermitian(const Matrix& x, double tol);
Matrix hermitize(const Matrix& x);

// Asserts Hermiticity, eigenvalues ≥ -tol.psd and |tr - 1| ≤ tol.trace.
void check_density_matrix(const Matrix& rho, const Tolerances& tol = {});
// Smallest eigenvalue must exceed tol.faithful.
void check_faithful(const Matrix& rho, const Tolerances& tol = {});

// Hermitian functional calculus.
Matrix hermitian_power(const Matrix& x, double a);
Matrix hermitian_log(const Matrix& x);
Matrix hermitian_exp(const Matrix& x);

// Eigenvalues of a Hermitian matrix merged into clusters of relative width
// tol_rel * (spectral diameter), with the orthogonal projection per cluster.
struct ClusteredSpectrum {
    std::vector<double> values;
    std::vector<Matrix> projections;
};
ClusteredSpectrum clustered_eigensystem(const Matrix& h, double tol_rel);

// Modular superoperator Δ_ρ(X) = ρ X ρ^{-1} and the spectral decomposition of
// log Δ_ρ: frequencies ω (differences of eigenvalues of log ρ) with
// projections P_ω(X) = Σ_{λ-μ=ω} P_λ X P_μ.
struct ModularData {
    Superop delta;
    std::vector<std::pair<double, Superop>> log_spectrum;
};
ModularData modular_superops(const Matrix& rho, const Tolerances& tol = {});

// Dominant eigenvalue data of a superoperator: value with maximal real part,
// biorthonormalized right/left eigenvectors, and the distance of the rest of
// the spectrum to the line Re z = Re value (infinity when the rest is empty).
struct SpectralPoint {
    Complex value;
    Matrix right_vec;
    Matrix left_vec;
    double gap = 0.0;
};
// Throws NumericalError when the dominant eigenvalue is not simple or another
// eigenvalue sits on the dominant line within tolerance.
SpectralPoint dominant_spectral_point(const Superop& s,
                                      const Tolerances& tol = {});

// max Re sp(S) without any simplicity requirement.
double spectral_bound(const Superop& s);

// Eigenvalues of a superoperator (unordered).
std::vector<Complex> superop_spectrum(const Superop& s);

// e^{tS}(X) for t ≥ 0.
Matrix semigroup_apply(const Superop& s, double t, const Matrix& x);
Superop superop_exp(const Superop& s);

} // namespace qdsf
