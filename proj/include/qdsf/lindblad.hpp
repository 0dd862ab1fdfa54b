// lindblad.hpp — Lindbladian data structures and structural checkers:
// complete positivity, detailed balance (both characterizations), modular
// decomposition, time reversal, irreducibility, positivity improvement.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdsf/liouville.hpp"
#include "qdsf/types.hpp"

namespace qdsf {

// Completely positive map given by its Kraus family: Φ(X) = Σ_j V_j† X V_j.
struct KrausMap {
    std::vector<Matrix> ops;

    Matrix apply(const Matrix& x) const;
    Matrix phi_one() const; // Φ(1) = Σ V† V
    Superop to_superop(Eigen::Index dim) const;
    Eigen::Index dim() const;
};

// Generator L(X) = i[T,X] - 1/2{Φ(1),X} + Φ(X) of a unital CP semigroup.
struct Lindbladian {
    Matrix t_op;
    KrausMap phi;
    Superop generator;
    Eigen::Index dim = 0;
};

Lindbladian lindblad_generator(const Matrix& t_op, const KrausMap& phi,
                               const Tolerances& tol = {});

// CP part of Φ restricted to one modular frequency, keyed by the entropy
// quantum ω ∈ sp(log Δ_ρ).
struct ModularPart {
    double quantum = 0.0;
    KrausMap kraus;
};

// A detailed-balance pair (ρ_j, L_j) together with the decomposition
// Φ = Σ_ω Φ_ω of its CP part.
struct SubLindbladian {
    Matrix rho_ref;
    Lindbladian lind;
    std::vector<ModularPart> modular_parts; // sorted by quantum
};

// Anti-unitary involution Θ(X) = θ X θ with θ = U ∘ (entrywise conjugation).
struct TimeReversal {
    Matrix u;

    static TimeReversal conjugation(Eigen::Index dim);
    Matrix operator()(const Matrix& x) const;
    bool involutive(double tol) const;
};

struct PropertyReport {
    std::string name;
    bool passed = false;
    double residual = 0.0;
    std::string details;
};

// Dissipation function D(X,Y) = L(X†Y) - L(X†)Y - X†L(Y).
Matrix dissipation(const Lindbladian& lind, const Matrix& x, const Matrix& y);

// Choi matrix with blocks C(i,j) = S(E_ij); PSD iff S is completely positive.
Matrix choi_matrix(const Superop& s);
PropertyReport choi_is_cp(const Superop& s, const Tolerances& tol = {});

// Definition-level detailed balance for the supplied decomposition:
// L†(ρ) = 0 and Φ^ρ = Φ.
PropertyReport detailed_balance_check(const Matrix& rho, const Lindbladian& lind,
                                      const Tolerances& tol = {});

// Decomposition-independent detailed balance via modular averaging. On
// success returns a decomposition (T', Φ') with Φ' ρ-self-adjoint.
struct NormalFormResult {
    bool ok = false;
    Matrix t_op;
    Superop phi;
    double residual = 0.0;
    std::string details;
};
NormalFormResult detailed_balance_normal_form(const Matrix& rho,
                                              const Lindbladian& lind,
                                              const Tolerances& tol = {});

// Splits Φ into modular components Φ_ω with Kraus content, given that
// (ρ, L) satisfies detailed balance.
SubLindbladian modular_decompose(const Matrix& rho, const Lindbladian& lind,
                                 const Tolerances& tol = {});

// Time-reversal invariance: L^ρ ∘ Θ = Θ ∘ L and Θ(ρ) = ρ.
PropertyReport time_reversal_check(const TimeReversal& theta, const Matrix& rho,
                                   const Lindbladian& lind,
                                   const Tolerances& tol = {});

// Span-closure irreducibility test: the algebra generated by {1, V_j} must be
// the full matrix algebra (dimension d^2).
PropertyReport irreducible(const KrausMap& phi, Eigen::Index dim,
                           const Tolerances& tol = {});

// Sufficient ergodicity check: irreducibility of the jump part, corroborated
// by strict positivity of e^{L}(|ψ><ψ|) on basis and random probe states.
PropertyReport positivity_improving_check(const Lindbladian& lind,
                                          const Tolerances& tol = {});

} // namespace qdsf
