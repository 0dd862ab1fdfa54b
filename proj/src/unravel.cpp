// unravel.cpp — Trajectory sampling and ensemble estimators

#include "qdsf/unravel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace qdsf {

namespace {

constexpr double kPruneNorm = 1e-14;
constexpr std::size_t kEventCap = 1000000;

std::uint64_t splitmix_mix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

ChannelSet build_channels(const WeakCouplingModel& model, const Tolerances& tol)
{
    ChannelSet set;
    set.dim = model.dim();
    set.reservoirs = model.reservoir_count();

    Matrix k = Matrix::Zero(set.dim, set.dim);
    Matrix completeness = Matrix::Zero(set.dim, set.dim);
    for (int j = 0; j < set.reservoirs; ++j) {
        const SubLindbladian& sub = model.subs[j];
        k += 0.5 * sub.lind.phi.phi_one() + Complex(0, 1) * sub.lind.t_op;
        for (const ModularPart& part : sub.modular_parts) {
            for (const Matrix& w : part.kraus.ops) {
                if (w.norm() <= kPruneNorm) continue;
                set.channels.push_back({j, part.quantum, w});
                completeness += w.adjoint() * w;
            }
        }
    }
    set.k_op = k;

    // Σ_channels W†W must reproduce Σ_j Φ_j(1).
    Matrix phi_one = Matrix::Zero(set.dim, set.dim);
    for (const SubLindbladian& sub : model.subs) phi_one += sub.lind.phi.phi_one();
    const double resid = (completeness - phi_one).cwiseAbs().maxCoeff();
    if (resid > tol.check * std::max(1.0, phi_one.cwiseAbs().maxCoeff())) {
        throw NumericalError("build_channels: channel completeness failed");
    }
    return set;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : counter_(splitmix_mix(seed) ^ splitmix_mix(stream * 0xda942042e4dd58b5ULL + 1))
{
}

std::uint64_t CounterRng::next_u64()
{
    return splitmix_mix(counter_++);
}

double CounterRng::uniform()
{
    // 53 bits, shifted away from exact 0.
    const double u = double(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
}

JumpSampler::JumpSampler(ChannelSet set, const Tolerances& tol)
    : set_(std::move(set)), prob_tol_(1e-10)
{
    (void)tol;
    Eigen::ComplexEigenSolver<Matrix> es(set_.k_op, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("JumpSampler: eigendecomposition of K failed");
    }
    evecs_ = es.eigenvectors();
    evals_ = es.eigenvalues();
    evecs_inv_ = evecs_.inverse();
}

Vector JumpSampler::propagate_coeffs(const Vector& psi) const
{
    return evecs_inv_ * psi;
}

double JumpSampler::survival(const Vector& coeffs, double s) const
{
    Vector scaled(coeffs.size());
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        scaled(i) = std::exp(-s * evals_(i)) * coeffs(i);
    }
    return (evecs_ * scaled).squaredNorm();
}

Trajectory JumpSampler::sample(const Vector& psi0, double t, CounterRng& rng) const
{
    if (t <= 0.0) {
        throw std::invalid_argument("sample: horizon must be positive");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("sample: initial vector must be normalized");
    }

    Trajectory traj;
    traj.horizon = t;
    Vector psi = psi0;
    double now = 0.0;

    while (true) {
        const Vector coeffs = propagate_coeffs(psi);
        const double rem = t - now;
        const double u = rng.uniform();
        if (survival(coeffs, rem) > u) break; // no jump before the horizon

        // Invert the survival function by bisection.
        double lo = 0.0, hi = rem;
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            const double s_mid = survival(coeffs, mid);
            if (std::abs(s_mid - u) <= prob_tol_ || hi - lo < 1e-15 * t) {
                lo = hi = mid;
                break;
            }
            if (s_mid > u) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        const double s_jump = 0.5 * (lo + hi);

        Vector scaled(coeffs.size());
        for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
            scaled(i) = std::exp(-s_jump * evals_(i)) * coeffs(i);
        }
        Vector pre_jump = evecs_ * scaled;
        const double norm = pre_jump.norm();
        if (norm < 1e-150) {
            std::ostringstream os;
            os << "sample: state norm underflow after " << traj.events.size()
               << " events at time " << now + s_jump;
            throw NumericalError(os.str());
        }
        pre_jump /= norm;

        std::vector<double> weights(set_.channels.size());
        double total = 0.0;
        for (std::size_t c = 0; c < set_.channels.size(); ++c) {
            weights[c] = (set_.channels[c].op * pre_jump).squaredNorm();
            total += weights[c];
        }
        if (total <= 0.0) {
            throw NumericalError("sample: zero jump intensity at a jump time");
        }
        // Bookkeeping: normalized channel probabilities must sum to one.
        double prob_sum = 0.0;
        for (double w : weights) prob_sum += w / total;
        if (std::abs(prob_sum - 1.0) > 1e-12) {
            throw NumericalError("sample: channel probabilities do not normalize");
        }

        const double r = rng.uniform() * total;
        std::size_t pick = 0;
        double acc = 0.0;
        for (std::size_t c = 0; c < set_.channels.size(); ++c) {
            acc += weights[c];
            if (r <= acc) {
                pick = c;
                break;
            }
            pick = c;
        }

        Vector post = set_.channels[pick].op * pre_jump;
        psi = post / post.norm();
        now += s_jump;
        traj.events.push_back(
            {set_.channels[pick].reservoir, set_.channels[pick].quantum, now});
        if (traj.events.size() > kEventCap) {
            std::ostringstream os;
            os << "sample: event cap (" << kEventCap << ") exceeded at time " << now
               << " of horizon " << t;
            throw NumericalError(os.str());
        }
    }
    return traj;
}

RealVector entropy_rates(const Trajectory& traj, int reservoirs)
{
    RealVector out = RealVector::Zero(reservoirs);
    for (const TrajectoryEvent& ev : traj.events) out(ev.reservoir) += ev.quantum;
    return out / traj.horizon;
}

EnsembleStats sample_ensemble(const WeakCouplingModel& model, const Matrix& rho,
                              double t, int n, std::uint64_t seed, int threads,
                              const Tolerances& tol)
{
    if (n < 1) {
        throw std::invalid_argument("sample_ensemble: need at least one trajectory");
    }
    check_density_matrix(rho, tol);

    const JumpSampler sampler(build_channels(model, tol), tol);
    const int m = model.reservoir_count();

    // Purify the initial state by eigen-sampling.
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho));
    std::vector<double> weights;
    std::vector<Vector> kets;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double w = std::max(0.0, es.eigenvalues()(i));
        if (w > 1e-15) {
            weights.push_back(w);
            kets.push_back(es.eigenvectors().col(i));
        }
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& w : weights) w /= wsum;

    EnsembleStats stats;
    stats.samples = n;
    stats.horizon = t;
    stats.seed = seed;
    stats.rates.resize(n, m);

    const int workers = std::max(1, threads == 0 ? default_thread_count() : threads);
    auto run_range = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            CounterRng rng(seed, std::uint64_t(i));
            const double pick = rng.uniform();
            std::size_t ket = 0;
            double acc = 0.0;
            for (std::size_t w = 0; w < weights.size(); ++w) {
                acc += weights[w];
                ket = w;
                if (pick <= acc) break;
            }
            const Trajectory traj = sampler.sample(kets[ket], t, rng);
            stats.rates.row(i) = entropy_rates(traj, m).transpose();
        }
    };

    if (workers == 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        const int chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int begin = w * chunk;
            const int end = std::min(n, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back([&run_range, &errors, w, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    errors[std::size_t(w)] = std::current_exception();
                }
            });
        }
        for (std::thread& th : pool) th.join();
        for (const std::exception_ptr& err : errors) {
            if (err) std::rethrow_exception(err);
        }
    }
    return stats;
}

BootstrapEstimate bootstrap_mean(const RealVector& samples, int resamples,
                                 std::uint64_t seed)
{
    const Eigen::Index n = samples.size();
    BootstrapEstimate est;
    est.value = samples.mean();
    if (n < 2 || resamples < 2) {
        est.lo = est.hi = est.value;
        return est;
    }

    std::vector<double> means(resamples);
    for (int r = 0; r < resamples; ++r) {
        CounterRng rng(seed, 0x626f6f74ULL + std::uint64_t(r));
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = Eigen::Index(rng.next_u64() % std::uint64_t(n));
            acc += samples(idx);
        }
        means[r] = acc / double(n);
    }
    std::sort(means.begin(), means.end());
    double sq = 0.0;
    double mu = std::accumulate(means.begin(), means.end(), 0.0) / double(resamples);
    for (double v : means) sq += (v - mu) * (v - mu);
    est.se = std::sqrt(sq / double(resamples - 1));
    est.lo = means[std::size_t(0.025 * double(resamples - 1))];
    est.hi = means[std::size_t(0.975 * double(resamples - 1))];
    return est;
}

RealVector laplace_weights(const EnsembleStats& stats, const RealVector& alpha)
{
    if (alpha.size() != stats.rates.cols()) {
        throw std::invalid_argument("laplace_weights: alpha dimension mismatch");
    }
    return (-stats.horizon * (stats.rates * alpha).array()).exp();
}

BootstrapEstimate bootstrap_laplace(const EnsembleStats& stats, const RealVector& alpha,
                                    int resamples, std::uint64_t seed)
{
    return bootstrap_mean(laplace_weights(stats, alpha), resamples, seed);
}

RealVector mean_rates(const EnsembleStats& stats)
{
    return stats.rates.colwise().mean();
}

RealMatrix rate_covariance(const EnsembleStats& stats)
{
    const Eigen::Index n = stats.rates.rows();
    const RealMatrix centered = stats.rates.rowwise() - stats.rates.colwise().mean();
    return (centered.transpose() * centered) / double(n - 1);
}

PropertyReport empirical_clt_check(const EnsembleStats& stats, const RealMatrix& d,
                                   double sigmas, int resamples, std::uint64_t seed)
{
    PropertyReport rep;
    rep.name = "empirical_clt";
    if (stats.samples < 10000) {
        rep.passed = false;
        rep.residual = 0.0;
        rep.details = "inconclusive: need at least 10^4 samples, have " +
                      std::to_string(stats.samples);
        return rep;
    }

    const int m = int(stats.rates.cols());
    const RealMatrix d_hat = stats.horizon * rate_covariance(stats);

    // Bootstrap SE per covariance entry.
    const Eigen::Index n = stats.rates.rows();
    RealMatrix se = RealMatrix::Zero(m, m);
    {
        std::vector<RealMatrix> draws;
        draws.reserve(resamples);
        for (int r = 0; r < resamples; ++r) {
            CounterRng rng(seed, 0x636c74ULL + std::uint64_t(r));
            RealMatrix resampled(n, m);
            for (Eigen::Index i = 0; i < n; ++i) {
                resampled.row(i) = stats.rates.row(
                    Eigen::Index(rng.next_u64() % std::uint64_t(n)));
            }
            const RealMatrix centered = resampled.rowwise() - resampled.colwise().mean();
            draws.push_back(stats.horizon * (centered.transpose() * centered) /
                            double(n - 1));
        }
        RealMatrix mean = RealMatrix::Zero(m, m);
        for (const RealMatrix& x : draws) mean += x;
        mean /= double(resamples);
        for (const RealMatrix& x : draws) {
            se.array() += (x - mean).array().square();
        }
        se = (se / double(resamples - 1)).cwiseSqrt();
    }

    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            const double diff = std::abs(d_hat(j, k) - d(j, k));
            const double scale = std::max(se(j, k), 1e-300);
            worst = std::max(worst, diff / scale);
        }
    }
    rep.residual = worst;
    rep.passed = worst <= sigmas;
    std::ostringstream os;
    os << "max |D_hat - D| = " << worst << " bootstrap SEs (limit " << sigmas << ")";
    rep.details = os.str();
    return rep;
}

} // namespace qdsf
