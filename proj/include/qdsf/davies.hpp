// davies.hpp — Weak-coupling-limit Lindbladians built from a declarative
// model: system Hamiltonian, coupling operators, reservoir temperatures and
// spectral tables. Verifies the detailed-balance / KMS / time-reversal /
// ergodicity hypotheses of the assembled generator.

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdsf/lindblad.hpp"
#include "qdsf/types.hpp"

namespace qdsf {

// System Hamiltonian with its clustered eigensystem and Bohr frequencies.
struct SystemSpec {
    Matrix h_sys;
    std::vector<double> levels;
    std::vector<Matrix> projections;
    std::vector<double> bohr; // sorted, symmetric around 0
    Eigen::Index dim() const { return h_sys.rows(); }
};

SystemSpec make_system(const Matrix& h_sys, const Tolerances& tol = {});

// Reservoir spectral data: either the named closed form h(ω) = γ·1 for ω ≥ 0,
// or an explicit table.
struct SpectralTable {
    enum class Form { flat, table };
    Form form = Form::table;
    double gamma = 0.0;
    std::vector<double> omegas;
    std::vector<Matrix> matrices;

    static SpectralTable flat_form(double gamma);
    std::optional<Matrix> lookup(double omega, Eigen::Index n, double match_tol) const;
};

struct ReservoirSpec {
    double beta = 1.0;
    std::vector<Matrix> couplings; // Hermitian Q^(k)
    SpectralTable h;               // positive-frequency side only
    std::optional<SpectralTable> s; // optional Lamb-shift table, any ω
    Eigen::Index coupling_count() const { return Eigen::Index(couplings.size()); }
};

struct WeakCouplingModel {
    SystemSpec system;
    std::vector<ReservoirSpec> reservoirs;
    std::vector<SubLindbladian> subs; // one per reservoir, rho_ref = Gibbs
    Lindbladian total;
    struct Flags {
        bool tri = false;
        bool er = false;
        bool kms = true;
    } flags;

    Eigen::Index dim() const { return system.dim(); }
    int reservoir_count() const { return int(reservoirs.size()); }
    RealVector betas() const;
};

// e^{-βH}/tr(e^{-βH}); β > 0.
Matrix gibbs_state(const Matrix& h_sys, double beta);

// V(ω) = Σ_{μ-ν=ω} P_ν Q P_μ for every Bohr frequency ω; V(-ω) = V(ω)†,
// Σ_ω V(ω) = Q.
std::vector<std::pair<double, Matrix>> jump_operators(const Matrix& q,
                                                      const SystemSpec& sys,
                                                      const Tolerances& tol = {});

// Completes a positive-frequency table to all requested frequencies through
// the KMS relation h(-ω) = e^{-βω} h(ω)^T.
std::vector<std::pair<double, Matrix>> kms_complete(const SpectralTable& h_pos,
                                                    double beta, Eigen::Index n,
                                                    const std::vector<double>& needed,
                                                    const Tolerances& tol = {});

// Builds the reservoir sub-Lindbladian with its Kraus family W and the
// modular parts keyed by entropy quantum β·ω. Throws when detailed balance
// fails against the Gibbs state.
SubLindbladian build_sub(const SystemSpec& sys, const ReservoirSpec& res,
                         const Tolerances& tol = {});

WeakCouplingModel assemble(const SystemSpec& sys,
                           const std::vector<ReservoirSpec>& reservoirs,
                           const Tolerances& tol = {});

// Joint commutant {Q}' ∩ {H_S}' must be trivial.
PropertyReport spohn_condition(const std::vector<Matrix>& couplings,
                               const Matrix& h_sys, const Tolerances& tol = {});

} // namespace qdsf
