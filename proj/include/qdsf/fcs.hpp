// fcs.hpp — Entropic full counting statistics built on the deformed generator
// L_(α): cumulant generating function e(α), fluctuation symmetries, steady
// state, fluxes, entropy production, rate function, CLT covariance and
// linear-response (Green-Kubo / Onsager / FDT) machinery.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qdsf/davies.hpp"
#include "qdsf/types.hpp"

namespace qdsf {

struct DeformedGenerator {
    RealVector alpha;
    Superop matrix;
};

// Builds L_(α) by the modular-parts route and cross-checks against the direct
// ρ_j-power route; throws NumericalError on disagreement.
DeformedGenerator deform(const WeakCouplingModel& model, const RealVector& alpha,
                         const Tolerances& tol = {});

struct CGFPoint {
    double value = 0.0;
    double gap = 0.0;
};

// Dominant eigenvalue of L_(α); requires a simple real dominant eigenvalue.
CGFPoint cgf_point(const WeakCouplingModel& model, const RealVector& alpha,
                   const Tolerances& tol = {});
double cgf(const WeakCouplingModel& model, const RealVector& alpha,
           const Tolerances& tol = {});

// log tr(ρ e^{tL_(α)}(1)).
double finite_time_cgf(const WeakCouplingModel& model, const Matrix& rho, double t,
                       const RealVector& alpha, const Tolerances& tol = {});

// Faithful steady state from the kernel of L†.
Matrix steady_state(const WeakCouplingModel& model, const Tolerances& tol = {});

struct FluxSet {
    std::vector<Matrix> entropy_obs;   // S_j = -log rho_j
    std::vector<Matrix> entropy_flux;  // I_j = L_j(S_j)
    std::vector<Matrix> energy_flux;   // F_j = L_j(H_S)
    std::vector<Matrix> centered_flux; // J_j = I_j - rho_+(I_j)
    std::vector<Matrix> plus_flux;     // J_j^+ = L_j^{rho_+}(S_j)
    RealVector mean_entropy_flux;      // rho_+(I_j)
    RealVector mean_energy_flux;       // phi_j = rho_+(F_j)
};
FluxSet fluxes(const WeakCouplingModel& model, const Tolerances& tol = {});

// σ(ρ) = Σ_j tr(L_j†(ρ)(log ρ_j - log ρ)).
double entropy_production(const WeakCouplingModel& model, const Matrix& rho,
                          const Tolerances& tol = {});

// ∇e(0) via first-order perturbation theory, cross-checked against central
// finite differences (step 1e-5, agreement 1e-6).
RealVector cgf_gradient0(const WeakCouplingModel& model, const Tolerances& tol = {});

// ∇²e(0) by Richardson-refined central second differences (step 1e-3).
RealMatrix cgf_hessian0(const WeakCouplingModel& model, const Tolerances& tol = {});

// ∇²e(0) by the stationary-correlation integral formula evaluated with
// Drazin-type inverses.
RealMatrix cgf_hessian0_integral(const WeakCouplingModel& model,
                                 const Tolerances& tol = {});

// Y = ∫_0^∞ e^{tL}(X) dt for centered X, solved from L(Y) = -X on the
// spectral complement of the kernel.
Matrix drazin_apply(const Superop& l, const Matrix& rho_plus, const Matrix& x,
                    const Tolerances& tol = {});

// Axis-aligned grid over a box, first coordinate slowest.
std::vector<RealVector> make_grid(const std::vector<std::pair<double, double>>& box,
                                  int resolution);

struct CGFScan {
    std::vector<RealVector> grid;
    std::vector<double> values;
    std::vector<double> gaps;
};
CGFScan scan_cgf(const WeakCouplingModel& model,
                 const std::vector<std::pair<double, double>>& box, int resolution,
                 const Tolerances& tol = {});

struct RateFunctionResult {
    double value = 0.0;
    bool infinite = false;
    RealVector minimizer;
    int iterations = 0;
    std::string note;
};

// I(ς) = -inf_α (α·ς + e(α)): damped Newton on the convex objective with a
// grid-search start; diverging objectives are flagged infinite with
// diagnostics, never silently.
RateFunctionResult rate_function(const WeakCouplingModel& model,
                                 const std::vector<std::pair<double, double>>& box,
                                 const RealVector& sigma, const Tolerances& tol = {});

// max over grid of |e(1-α) - e(α)|.
double es_symmetry_residual(const WeakCouplingModel& model,
                            const std::vector<RealVector>& grid,
                            const Tolerances& tol = {});

struct TranslationCheck {
    double value_residual = 0.0;
    double spectrum_residual = 0.0;
    double similarity_residual = 0.0;
};
// e(α + λβ^{-1}) = e(α) plus the spectral-multiset and similarity checks.
TranslationCheck translation_symmetry_check(const WeakCouplingModel& model,
                                            const std::vector<RealVector>& grid,
                                            const std::vector<double>& lambdas,
                                            const Tolerances& tol = {});

// χ(α) = e(-α/β) componentwise.
double energetic_cgf(const WeakCouplingModel& model, const RealVector& alpha,
                     const Tolerances& tol = {});

struct EnergeticSymmetryCheck {
    double translation_residual = 0.0; // χ(α) = χ(α + λ1)
    double es_residual = 0.0;          // χ(α) = χ(-β-α), TRI only
};
EnergeticSymmetryCheck energetic_symmetry_check(const WeakCouplingModel& model,
                                                const std::vector<RealVector>& grid,
                                                const std::vector<double>& lambdas,
                                                const Tolerances& tol = {});

// Kinetic coefficients L_jk = ∂φ_j/∂ζ_k at ζ=0 with β_j = β0 - ζ_j, by
// central differences of steady-state energy fluxes.
RealMatrix kinetic_coefficients(const SystemSpec& sys,
                                const std::vector<ReservoirSpec>& reservoirs,
                                double beta0, double dzeta,
                                const Tolerances& tol = {});

struct GreenKuboResult {
    RealMatrix integral;       // stationary flux-correlation integrals
    RealMatrix hessian;        // (1/2β0²) ∇²e(0)
    RealMatrix lebowitz_spohn; // steady-state derivative route
};
// Requires all β_j equal within 1e-12.
GreenKuboResult green_kubo_matrix(const WeakCouplingModel& model,
                                  const Tolerances& tol = {});

struct LinearResponseReport {
    RealMatrix kinetic;
    RealMatrix green_kubo;
    RealMatrix hessian_route;
    RealMatrix lebowitz_spohn;
    RealMatrix fdt_covariance; // energetic CLT covariance D
    double onsager_residual = 0.0;
    double column_residual = 0.0;
    double fdt_residual = 0.0;
    double pairwise_residual = 0.0;
};
LinearResponseReport linear_response(const WeakCouplingModel& model, double dzeta,
                                     const Tolerances& tol = {});

} // namespace qdsf
