// unravel.hpp — Quantum-jump Monte Carlo sampling of the trajectory measure
// and empirical estimation of the entropic full counting statistics.

#pragma once

#include <cstdint>
#include <vector>

#include "qdsf/davies.hpp"
#include "qdsf/types.hpp"

namespace qdsf {

// A jump channel: reservoir index, entropy quantum carried per jump, and the
// Kraus operator of the corresponding modular component.
struct JumpChannel {
    int reservoir = 0;
    double quantum = 0.0;
    Matrix op;
};

struct ChannelSet {
    std::vector<JumpChannel> channels;
    Matrix k_op; // K = Σ_j (Φ_j(1)/2 + iT_j); no-jump generator is -K on kets
    Eigen::Index dim = 0;
    int reservoirs = 0;
};

ChannelSet build_channels(const WeakCouplingModel& model, const Tolerances& tol = {});

// Counter-based stream (SplitMix64 mixing keyed by seed and stream id):
// reproducible and parallelizable without coordination.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);
    std::uint64_t next_u64();
    double uniform(); // (0, 1)

private:
    std::uint64_t counter_;
};

struct TrajectoryEvent {
    int reservoir = 0;
    double quantum = 0.0;
    double time = 0.0;
};

struct Trajectory {
    double horizon = 0.0;
    std::vector<TrajectoryEvent> events; // chronological
};

// Waiting-time sampler with the eigendecomposition of K cached; survival
// probabilities are inverted by bisection (no time-step discretization).
class JumpSampler {
public:
    JumpSampler(ChannelSet set, const Tolerances& tol = {});

    Trajectory sample(const Vector& psi0, double t, CounterRng& rng) const;
    const ChannelSet& channels() const { return set_; }

private:
    Vector propagate_coeffs(const Vector& psi) const;
    double survival(const Vector& coeffs, double s) const;

    ChannelSet set_;
    Matrix evecs_;
    Matrix evecs_inv_;
    Vector evals_;
    double prob_tol_;
};

// ς_j(ξ) = (1/t) Σ_{k: j_k=j} ω_k.
RealVector entropy_rates(const Trajectory& traj, int reservoirs);

struct EnsembleStats {
    int samples = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    RealMatrix rates; // samples x reservoirs, ordered by trajectory index
};

// N independent trajectories from eigen-sampled pure initial states.
// threads = 0 picks the default worker count.
EnsembleStats sample_ensemble(const WeakCouplingModel& model, const Matrix& rho,
                              double t, int n, std::uint64_t seed, int threads = 0,
                              const Tolerances& tol = {});

struct BootstrapEstimate {
    double value = 0.0;
    double se = 0.0;
    double lo = 0.0; // percentile 2.5%
    double hi = 0.0; // percentile 97.5%
};

// Percentile bootstrap of the mean of per-sample values (200 resamples by default).
BootstrapEstimate bootstrap_mean(const RealVector& samples, int resamples,
                                 std::uint64_t seed);

// Per-sample Laplace weights e^{-t α·ς} and their bootstrap mean.
RealVector laplace_weights(const EnsembleStats& stats, const RealVector& alpha);
BootstrapEstimate bootstrap_laplace(const EnsembleStats& stats, const RealVector& alpha,
                                    int resamples, std::uint64_t seed);

RealVector mean_rates(const EnsembleStats& stats);
RealMatrix rate_covariance(const EnsembleStats& stats);

// Standardized empirical covariance of sqrt(t)(ς - <ς>) against D, entrywise
// within `sigmas` bootstrap standard errors. Inconclusive below 10^4 samples.
PropertyReport empirical_clt_check(const EnsembleStats& stats, const RealMatrix& d,
                                   double sigmas = 5.0, int resamples = 200,
                                   std::uint64_t seed = 0x5eedULL);

} // namespace qdsf
