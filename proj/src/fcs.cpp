// fcs.cpp — Deformed generators, cumulant generating function and the
// analyses built on top of it

#include "qdsf/fcs.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace qdsf {

namespace {

// Grid evaluations are pure; run them on worker threads, results landing in
// preallocated slots so the merge order is deterministic.
void parallel_over(std::size_t count, const std::function<void(std::size_t)>& body)
{
    const int workers =
        std::min<int>(default_thread_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::size_t chunk = (count + std::size_t(workers) - 1) / std::size_t(workers);
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = std::size_t(w) * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, &errors, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
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

void require_reservoir_count(const WeakCouplingModel& model, const RealVector& alpha)
{
    if (alpha.size() != model.reservoir_count()) {
        throw std::invalid_argument("alpha must have one entry per reservoir");
    }
}

void require_ergodic(const WeakCouplingModel& model)
{
    if (!model.flags.er) {
        throw std::invalid_argument("model does not satisfy the ergodicity hypothesis");
    }
}

Matrix sub_apply(const SubLindbladian& sub, const Matrix& x)
{
    return apply_superop(sub.lind.generator, x);
}

} // namespace

DeformedGenerator deform(const WeakCouplingModel& model, const RealVector& alpha,
                         const Tolerances& tol)
{
    require_reservoir_count(model, alpha);
    const Eigen::Index d = model.dim();
    const Matrix id = Matrix::Identity(d, d);

    // Modular route: L_(α) = K + Σ_j Σ_ω e^{-α_j ω} Φ_{j,ω},
    // K(X) = -K†X - XK, K = Σ_j (Φ_j(1)/2 + iT_j).
    Matrix k_op = Matrix::Zero(d, d);
    for (const SubLindbladian& sub : model.subs) {
        if (sub.modular_parts.empty() && sub.lind.phi.phi_one().norm() > 1e-13) {
            throw std::invalid_argument("deform: sub-Lindbladian lacks modular parts");
        }
        k_op += 0.5 * sub.lind.phi.phi_one() + Complex(0, 1) * sub.lind.t_op;
    }
    Superop modular_route = -sandwich(k_op.adjoint(), id) - sandwich(id, k_op);
    for (int j = 0; j < model.reservoir_count(); ++j) {
        for (const ModularPart& part : model.subs[j].modular_parts) {
            modular_route +=
                std::exp(-alpha(j) * part.quantum) * part.kraus.to_superop(d);
        }
    }

    // Direct route: Σ_j L_j(X ρ_j^{-α_j}) ρ_j^{α_j}.
    Superop direct_route = Superop::Zero(d * d, d * d);
    for (int j = 0; j < model.reservoir_count(); ++j) {
        const Matrix rpow = hermitian_power(model.subs[j].rho_ref, alpha(j));
        const Matrix rneg = hermitian_power(model.subs[j].rho_ref, -alpha(j));
        direct_route += sandwich(id, rpow) * model.subs[j].lind.generator * sandwich(id, rneg);
    }

    const double scale = std::max(1.0, direct_route.cwiseAbs().maxCoeff());
    const double resid = (modular_route - direct_route).cwiseAbs().maxCoeff();
    if (resid > 1e3 * tol.check * scale) {
        std::ostringstream os;
        os << "deform: modular and direct routes disagree, residual " << resid;
        throw NumericalError(os.str());
    }
    return {alpha, modular_route};
}

CGFPoint cgf_point(const WeakCouplingModel& model, const RealVector& alpha,
                   const Tolerances& tol)
{
    require_ergodic(model);
    const DeformedGenerator gen = deform(model, alpha, tol);
    const SpectralPoint sp = dominant_spectral_point(gen.matrix, tol);
    const double scale = std::max(1.0, gen.matrix.cwiseAbs().maxCoeff());
    if (std::abs(sp.value.imag()) > tol.eig * scale) {
        throw NumericalError("cgf: dominant eigenvalue has a non-real part");
    }
    return {sp.value.real(), sp.gap};
}

double cgf(const WeakCouplingModel& model, const RealVector& alpha, const Tolerances& tol)
{
    return cgf_point(model, alpha, tol).value;
}

double finite_time_cgf(const WeakCouplingModel& model, const Matrix& rho, double t,
                       const RealVector& alpha, const Tolerances& tol)
{
    if (t < 0.0) {
        throw std::invalid_argument("finite_time_cgf: t must be non-negative");
    }
    check_density_matrix(rho, tol);
    const DeformedGenerator gen = deform(model, alpha, tol);
    const Matrix evolved =
        semigroup_apply(gen.matrix, t, Matrix::Identity(model.dim(), model.dim()));
    const Complex val = (rho * evolved).trace();
    if (val.real() <= 0.0) {
        throw NumericalError("finite_time_cgf: non-positive Laplace transform");
    }
    return std::log(val.real());
}

Matrix steady_state(const WeakCouplingModel& model, const Tolerances& tol)
{
    require_ergodic(model);
    const SpectralPoint sp = dominant_spectral_point(model.total.generator, tol);
    const double scale = std::max(1.0, model.total.generator.cwiseAbs().maxCoeff());
    if (std::abs(sp.value) > 1e2 * tol.eig * scale) {
        throw NumericalError("steady_state: generator is not unital (e(0) != 0)");
    }
    Matrix rho = hermitize(sp.left_vec);
    rho /= rho.trace().real();
    check_faithful(rho, tol);
    const double resid =
        apply_superop(adjoint_superop(model.total.generator), rho).cwiseAbs().maxCoeff();
    if (resid > 1e2 * tol.eig * scale) {
        throw NumericalError("steady_state: stationarity residual too large");
    }
    return rho;
}

FluxSet fluxes(const WeakCouplingModel& model, const Tolerances& tol)
{
    const Matrix rho_plus = steady_state(model, tol);
    const Matrix rho_plus_inv = hermitian_power(rho_plus, -1.0);
    const Eigen::Index d = model.dim();
    const int m = model.reservoir_count();

    FluxSet fs;
    fs.mean_entropy_flux.resize(m);
    fs.mean_energy_flux.resize(m);
    for (int j = 0; j < m; ++j) {
        const SubLindbladian& sub = model.subs[j];
        const Matrix s_j = -hermitian_log(sub.rho_ref);
        const Matrix i_j = sub_apply(sub, s_j);
        const Matrix f_j = sub_apply(sub, model.system.h_sys);
        const double mean_i = (rho_plus * i_j).trace().real();
        const double mean_f = (rho_plus * f_j).trace().real();
        const Matrix j_j = i_j - mean_i * Matrix::Identity(d, d);
        const Matrix j_plus =
            apply_superop(adjoint_superop(sub.lind.generator), s_j * rho_plus) * rho_plus_inv;

        fs.entropy_obs.push_back(s_j);
        fs.entropy_flux.push_back(i_j);
        fs.energy_flux.push_back(f_j);
        fs.centered_flux.push_back(j_j);
        fs.plus_flux.push_back(j_plus);
        fs.mean_entropy_flux(j) = mean_i;
        fs.mean_energy_flux(j) = mean_f;
    }
    return fs;
}

double entropy_production(const WeakCouplingModel& model, const Matrix& rho,
                          const Tolerances& tol)
{
    check_faithful(rho, tol);
    const Matrix log_rho = hermitian_log(rho);
    double sigma = 0.0;
    for (const SubLindbladian& sub : model.subs) {
        const Matrix drift = apply_superop(adjoint_superop(sub.lind.generator), rho);
        const Matrix log_ref = hermitian_log(sub.rho_ref);
        sigma += (drift * (log_ref - log_rho)).trace().real();
    }
    return sigma;
}

RealVector cgf_gradient0(const WeakCouplingModel& model, const Tolerances& tol)
{
    require_ergodic(model);
    const FluxSet fs = fluxes(model, tol);
    const int m = model.reservoir_count();

    RealVector perturbative = fs.mean_entropy_flux;

    const double h = 1e-5;
    for (int j = 0; j < m; ++j) {
        RealVector a = RealVector::Zero(m);
        a(j) = h;
        const double plus = cgf(model, a, tol);
        a(j) = -h;
        const double minus = cgf(model, a, tol);
        const double fd = (plus - minus) / (2.0 * h);
        if (std::abs(fd - perturbative(j)) > 1e-6) {
            std::ostringstream os;
            os << "cgf_gradient0: perturbative value " << perturbative(j)
               << " and finite difference " << fd << " disagree in component " << j;
            throw NumericalError(os.str());
        }
    }
    return perturbative;
}

namespace {

RealMatrix hessian_fd(const WeakCouplingModel& model, double h, const Tolerances& tol)
{
    const int m = model.reservoir_count();
    RealMatrix out(m, m);
    const double e0 = cgf(model, RealVector::Zero(m), tol);
    for (int j = 0; j < m; ++j) {
        RealVector a = RealVector::Zero(m);
        a(j) = h;
        const double plus = cgf(model, a, tol);
        a(j) = -h;
        const double minus = cgf(model, a, tol);
        out(j, j) = (plus - 2.0 * e0 + minus) / (h * h);
    }
    for (int j = 0; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
            RealVector a = RealVector::Zero(m);
            a(j) = h;
            a(k) = h;
            const double pp = cgf(model, a, tol);
            a(k) = -h;
            const double pm = cgf(model, a, tol);
            a(j) = -h;
            const double mm = cgf(model, a, tol);
            a(k) = h;
            const double mp = cgf(model, a, tol);
            out(j, k) = out(k, j) = (pp - pm - mp + mm) / (4.0 * h * h);
        }
    }
    return out;
}

} // namespace

RealMatrix cgf_hessian0(const WeakCouplingModel& model, const Tolerances& tol)
{
    const double h = 1e-3;
    const RealMatrix coarse = hessian_fd(model, h, tol);
    const RealMatrix fine = hessian_fd(model, 0.5 * h, tol);
    return (4.0 * fine - coarse) / 3.0;
}

namespace {

// Solves A(Y) = -X on the complement of the simple kernel pair
// (right_kernel, left_kernel), normalized to <left|right> = 1.
Matrix drazin_solve(const Superop& a, const Vector& right_kernel,
                    const Vector& left_kernel, const Matrix& x, const Tolerances& tol)
{
    const Complex pairing = left_kernel.dot(right_kernel); // conjugates left
    if (std::abs(pairing) < 1e-14) {
        throw NumericalError("drazin: degenerate kernel pairing");
    }
    const Superop projector = (right_kernel * left_kernel.adjoint()) / pairing;
    const Vector xv = vectorize(x);
    const Superop shifted = a + projector;
    const Vector yv = shifted.partialPivLu().solve(-xv);
    const Matrix y = devectorize(yv, x.rows());

    const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
    const double resid = (apply_superop(a, y) + x).cwiseAbs().maxCoeff();
    if (resid > 1e3 * tol.eig * scale) {
        throw NumericalError("drazin: restricted solve has a large residual");
    }
    return y;
}

} // namespace

Matrix drazin_apply(const Superop& l, const Matrix& rho_plus, const Matrix& x,
                    const Tolerances& tol)
{
    const double centered = std::abs((rho_plus * x).trace());
    if (centered > 1e3 * tol.check * std::max(1.0, x.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("drazin_apply: X is not flux-centered (tr(rho_+ X) != 0)");
    }
    const Eigen::Index d = x.rows();
    const Matrix y = drazin_solve(l, vectorize(Matrix::Identity(d, d)),
                                  vectorize(rho_plus), x, tol);
    const double kernel_comp = std::abs((rho_plus * y).trace());
    if (kernel_comp > 1e3 * tol.check * std::max(1.0, y.cwiseAbs().maxCoeff())) {
        throw NumericalError("drazin_apply: solution leaks into the kernel");
    }
    return y;
}

RealMatrix cgf_hessian0_integral(const WeakCouplingModel& model, const Tolerances& tol)
{
    require_ergodic(model);
    const Matrix rho_plus = steady_state(model, tol);
    const FluxSet fs = fluxes(model, tol);
    const int m = model.reservoir_count();

    std::vector<Matrix> integrated; // Y_j = ∫ e^{tL}(J_j) dt
    for (int j = 0; j < m; ++j) {
        integrated.push_back(
            drazin_apply(model.total.generator, rho_plus, fs.centered_flux[j], tol));
    }

    auto mean = [&rho_plus](const Matrix& x) { return (rho_plus * x).trace().real(); };

    RealMatrix out(m, m);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            const Matrix& y_j = integrated[j];
            const Matrix& y_k = integrated[k];
            double val = mean(sub_apply(model.subs[k], y_j * fs.entropy_obs[k])) -
                         mean(y_j * fs.plus_flux[k]) +
                         mean(sub_apply(model.subs[j], y_k * fs.entropy_obs[j])) -
                         mean(y_k * fs.plus_flux[j]);
            if (j == k) {
                val += mean(dissipation(model.subs[j].lind, fs.entropy_obs[j],
                                        fs.entropy_obs[j]));
            }
            out(j, k) = val;
        }
    }
    return 0.5 * (out + out.transpose()).eval();
}

std::vector<RealVector> make_grid(const std::vector<std::pair<double, double>>& box,
                                  int resolution)
{
    if (box.empty() || resolution < 2) {
        throw std::invalid_argument("make_grid: need a non-empty box and resolution >= 2");
    }
    const int dims = int(box.size());
    std::vector<RealVector> out;
    std::vector<int> idx(dims, 0);
    while (true) {
        RealVector p(dims);
        for (int i = 0; i < dims; ++i) {
            const auto& [lo, hi] = box[i];
            p(i) = lo + (hi - lo) * double(idx[i]) / double(resolution - 1);
        }
        out.push_back(std::move(p));
        int i = dims - 1;
        while (i >= 0 && ++idx[i] == resolution) {
            idx[i] = 0;
            --i;
        }
        if (i < 0) break;
    }
    return out;
}

CGFScan scan_cgf(const WeakCouplingModel& model,
                 const std::vector<std::pair<double, double>>& box, int resolution,
                 const Tolerances& tol)
{
    CGFScan scan;
    scan.grid = make_grid(box, resolution);
    scan.values.resize(scan.grid.size());
    scan.gaps.resize(scan.grid.size());
    parallel_over(scan.grid.size(), [&](std::size_t i) {
        const CGFPoint p = cgf_point(model, scan.grid[i], tol);
        scan.values[i] = p.value;
        scan.gaps[i] = p.gap;
    });
    return scan;
}

namespace {

RealVector cgf_gradient_at(const WeakCouplingModel& model, const RealVector& alpha,
                           const Tolerances& tol)
{
    const int m = model.reservoir_count();
    RealVector g(m);
    const double h = 1e-5;
    for (int j = 0; j < m; ++j) {
        RealVector a = alpha;
        a(j) += h;
        const double plus = cgf(model, a, tol);
        a(j) = alpha(j) - h;
        const double minus = cgf(model, a, tol);
        g(j) = (plus - minus) / (2.0 * h);
    }
    return g;
}

RealMatrix cgf_hessian_at(const WeakCouplingModel& model, const RealVector& alpha,
                          const Tolerances& tol)
{
    const int m = model.reservoir_count();
    const double h = 1e-3;
    RealMatrix out(m, m);
    const double e0 = cgf(model, alpha, tol);
    for (int j = 0; j < m; ++j) {
        RealVector a = alpha;
        a(j) += h;
        const double plus = cgf(model, a, tol);
        a(j) = alpha(j) - h;
        const double minus = cgf(model, a, tol);
        out(j, j) = (plus - 2.0 * e0 + minus) / (h * h);
    }
    for (int j = 0; j < m; ++j) {
        for (int k = j + 1; k < m; ++k) {
            RealVector a = alpha;
            a(j) += h;
            a(k) += h;
            const double pp = cgf(model, a, tol);
            a(k) = alpha(k) - h;
            const double pm = cgf(model, a, tol);
            a(j) = alpha(j) - h;
            const double mm = cgf(model, a, tol);
            a(k) = alpha(k) + h;
            const double mp = cgf(model, a, tol);
            out(j, k) = out(k, j) = (pp - pm - mp + mm) / (4.0 * h * h);
        }
    }
    return out;
}

} // namespace

RateFunctionResult rate_function(const WeakCouplingModel& model,
                                 const std::vector<std::pair<double, double>>& box,
                                 const RealVector& sigma, const Tolerances& tol)
{
    require_ergodic(model);
    const int m = model.reservoir_count();
    if (int(box.size()) != m || sigma.size() != m) {
        throw std::invalid_argument("rate_function: box/sigma dimension mismatch");
    }

    const auto objective = [&](const RealVector& a) {
        return a.dot(sigma) + cgf(model, a, tol);
    };

    // Grid-search start.
    const std::vector<RealVector> grid = make_grid(box, 9);
    RealVector best = grid.front();
    double best_val = objective(best);
    for (const RealVector& a : grid) {
        const double v = objective(a);
        if (v < best_val) {
            best_val = v;
            best = a;
        }
    }

    double box_radius = 0.0;
    for (const auto& [lo, hi] : box) {
        box_radius = std::max(box_radius, std::max(std::abs(lo), std::abs(hi)));
    }
    const double escape_radius = 3.0 * std::max(1.0, box_radius);
    const double grad_tol = 1e-9 * std::max(1.0, sigma.cwiseAbs().maxCoeff());

    RateFunctionResult out;
    RealVector alpha = best;
    double f = best_val;
    for (int iter = 0; iter < 200; ++iter) {
        out.iterations = iter + 1;
        const RealVector g = sigma + cgf_gradient_at(model, alpha, tol);
        if (g.cwiseAbs().maxCoeff() <= grad_tol) {
            out.value = -f;
            out.minimizer = alpha;
            out.note = "converged";
            return out;
        }
        if (alpha.cwiseAbs().maxCoeff() > escape_radius) {
            // Objective keeps decreasing toward the boundary with a gradient
            // bounded away from zero: the infimum diverges.
            out.infinite = true;
            out.value = std::numeric_limits<double>::infinity();
            out.minimizer = alpha;
            out.note = "divergent: iterate escaped the scan box with |grad| = " +
                       std::to_string(g.cwiseAbs().maxCoeff());
            return out;
        }

        RealMatrix hess = cgf_hessian_at(model, alpha, tol);
        const double ridge = 1e-10 * std::max(1.0, hess.cwiseAbs().maxCoeff());
        hess.diagonal().array() += ridge;
        RealVector step = hess.ldlt().solve(-g);
        if (!step.allFinite() || step.dot(g) > 0.0) step = -g;

        double s = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            const RealVector trial = alpha + s * step;
            const double ft = objective(trial);
            if (ft < f - 1e-12 * std::abs(f)) {
                alpha = trial;
                f = ft;
                moved = true;
                break;
            }
            s *= 0.5;
        }
        if (!moved) {
            // No descent available: treat the current point as the minimizer.
            out.value = -f;
            out.minimizer = alpha;
            out.note = "stalled with |grad| = " + std::to_string(g.cwiseAbs().maxCoeff());
            return out;
        }
    }
    out.value = -f;
    out.minimizer = alpha;
    out.note = "iteration limit reached";
    return out;
}

double es_symmetry_residual(const WeakCouplingModel& model,
                            const std::vector<RealVector>& grid, const Tolerances& tol)
{
    std::vector<double> resid(grid.size());
    parallel_over(grid.size(), [&](std::size_t i) {
        const RealVector& a = grid[i];
        const RealVector mirrored = RealVector::Ones(a.size()) - a;
        resid[i] = std::abs(cgf(model, mirrored, tol) - cgf(model, a, tol));
    });
    return resid.empty() ? 0.0 : *std::max_element(resid.begin(), resid.end());
}

namespace {

double multiset_distance(std::vector<Complex> a, std::vector<Complex> b)
{
    double worst = 0.0;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double dist = std::abs(x - b[i]);
            if (dist < best) {
                best = dist;
                best_idx = i;
            }
        }
        worst = std::max(worst, best);
        b.erase(b.begin() + long(best_idx));
    }
    return worst;
}

} // namespace

TranslationCheck translation_symmetry_check(const WeakCouplingModel& model,
                                            const std::vector<RealVector>& grid,
                                            const std::vector<double>& lambdas,
                                            const Tolerances& tol)
{
    if (!model.flags.kms) {
        throw std::invalid_argument("translation symmetry requires the KMS hypothesis");
    }
    const RealVector beta_inv = model.betas().cwiseInverse();

    std::vector<TranslationCheck> partial(grid.size());
    parallel_over(grid.size(), [&](std::size_t i) {
        const RealVector& a = grid[i];
        TranslationCheck local;
        const double base = cgf(model, a, tol);
        const DeformedGenerator base_gen = deform(model, a, tol);
        const auto base_spec = superop_spectrum(base_gen.matrix);
        for (double lambda : lambdas) {
            const RealVector shifted = a + lambda * beta_inv;
            local.value_residual =
                std::max(local.value_residual, std::abs(cgf(model, shifted, tol) - base));

            const DeformedGenerator shift_gen = deform(model, shifted, tol);
            local.spectrum_residual = std::max(
                local.spectrum_residual,
                multiset_distance(superop_spectrum(shift_gen.matrix), base_spec));

            // L_(α+λβ^{-1}) = R_ν^{λ/2} ∘ L_(α) ∘ R_ν^{-λ/2} with ν = e^{-H_S}.
            const Matrix nu_plus = hermitian_exp(-0.5 * lambda * model.system.h_sys);
            const Matrix nu_minus = hermitian_exp(0.5 * lambda * model.system.h_sys);
            const Superop conjugated = sandwich(nu_plus, nu_plus) * base_gen.matrix *
                                       sandwich(nu_minus, nu_minus);
            const double scale = std::max(1.0, conjugated.cwiseAbs().maxCoeff());
            local.similarity_residual =
                std::max(local.similarity_residual,
                         (conjugated - shift_gen.matrix).cwiseAbs().maxCoeff() / scale);
        }
        partial[i] = local;
    });

    TranslationCheck out;
    for (const TranslationCheck& local : partial) {
        out.value_residual = std::max(out.value_residual, local.value_residual);
        out.spectrum_residual = std::max(out.spectrum_residual, local.spectrum_residual);
        out.similarity_residual =
            std::max(out.similarity_residual, local.similarity_residual);
    }
    return out;
}

double energetic_cgf(const WeakCouplingModel& model, const RealVector& alpha,
                     const Tolerances& tol)
{
    require_reservoir_count(model, alpha);
    const RealVector scaled = -alpha.cwiseQuotient(model.betas());
    return cgf(model, scaled, tol);
}

EnergeticSymmetryCheck energetic_symmetry_check(const WeakCouplingModel& model,
                                                const std::vector<RealVector>& grid,
                                                const std::vector<double>& lambdas,
                                                const Tolerances& tol)
{
    EnergeticSymmetryCheck out;
    const RealVector beta = model.betas();
    const RealVector ones = RealVector::Ones(beta.size());
    for (const RealVector& a : grid) {
        const double base = energetic_cgf(model, a, tol);
        for (double lambda : lambdas) {
            out.translation_residual =
                std::max(out.translation_residual,
                         std::abs(energetic_cgf(model, a + lambda * ones, tol) - base));
        }
        out.es_residual = std::max(
            out.es_residual, std::abs(energetic_cgf(model, (-beta - a).eval(), tol) - base));
    }
    return out;
}

RealMatrix kinetic_coefficients(const SystemSpec& sys,
                                const std::vector<ReservoirSpec>& reservoirs,
                                double beta0, double dzeta, const Tolerances& tol)
{
    const int m = int(reservoirs.size());

    auto flux_at = [&](const RealVector& zeta) {
        std::vector<ReservoirSpec> shifted = reservoirs;
        for (int j = 0; j < m; ++j) {
            shifted[j].beta = beta0 - zeta(j);
            if (shifted[j].beta <= 0.0) {
                throw std::invalid_argument("kinetic_coefficients: stencil leaves beta > 0");
            }
        }
        const WeakCouplingModel model = assemble(sys, shifted, tol);
        require_ergodic(model);
        return fluxes(model, tol).mean_energy_flux;
    };

    RealMatrix out(m, m);
    for (int k = 0; k < m; ++k) {
        RealVector zeta = RealVector::Zero(m);
        zeta(k) = dzeta;
        const RealVector plus = flux_at(zeta);
        zeta(k) = -dzeta;
        const RealVector minus = flux_at(zeta);
        out.col(k) = (plus - minus) / (2.0 * dzeta);
    }
    return out;
}

GreenKuboResult green_kubo_matrix(const WeakCouplingModel& model, const Tolerances& tol)
{
    const RealVector beta = model.betas();
    const double beta0 = beta(0);
    for (int j = 0; j < beta.size(); ++j) {
        if (std::abs(beta(j) - beta0) > 1e-12) {
            throw std::invalid_argument("green_kubo_matrix: model is not at equilibrium");
        }
    }
    require_ergodic(model);

    const Matrix rho0 = steady_state(model, tol);
    const FluxSet fs = fluxes(model, tol);
    const int m = model.reservoir_count();
    const Eigen::Index d = model.dim();
    auto mean = [&rho0](const Matrix& x) { return (rho0 * x).trace().real(); };

    GreenKuboResult out;

    // Stationary correlation route:
    // L_jk = δ_jk ρ0(D_j(H,H))/2 − ∫_0^∞ ρ0(e^{tL}(F_j) F_k) dt.
    out.integral.resize(m, m);
    std::vector<Matrix> integrated;
    for (int j = 0; j < m; ++j) {
        const Matrix centered =
            fs.energy_flux[j] - mean(fs.energy_flux[j]) * Matrix::Identity(d, d);
        integrated.push_back(drazin_apply(model.total.generator, rho0, centered, tol));
    }
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < m; ++k) {
            double val = -mean(integrated[j] * fs.energy_flux[k]);
            if (j == k) {
                val += 0.5 * mean(dissipation(model.subs[j].lind, model.system.h_sys,
                                              model.system.h_sys));
            }
            out.integral(j, k) = val;
        }
    }

    // Symmetry-derived route: L = ∇²χ(0)/2 = ∇²e(0)/(2β0²).
    out.hessian = cgf_hessian0(model, tol) / (2.0 * beta0 * beta0);

    // Steady-state derivative route (Schrödinger picture): for j != k,
    // L_jk = -tr(F_j Z_k) with L†(Z_k) = -F_k ρ0; diagonal from Σ_j L_jk = 0.
    out.lebowitz_spohn.resize(m, m);
    const Superop l_adj = adjoint_superop(model.total.generator);
    for (int k = 0; k < m; ++k) {
        const Matrix x = fs.energy_flux[k] * rho0;
        const Matrix z = drazin_solve(l_adj, vectorize(rho0),
                                      vectorize(Matrix::Identity(d, d)), x, tol);
        double col_off_diag = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j == k) continue;
            const double val = -(fs.energy_flux[j] * z).trace().real();
            out.lebowitz_spohn(j, k) = val;
            col_off_diag += val;
        }
        out.lebowitz_spohn(k, k) = -col_off_diag;
    }
    return out;
}

LinearResponseReport linear_response(const WeakCouplingModel& model, double dzeta,
                                     const Tolerances& tol)
{
    const GreenKuboResult gk = green_kubo_matrix(model, tol);
    const double beta0 = model.reservoirs.front().beta;

    LinearResponseReport rep;
    rep.green_kubo = gk.integral;
    rep.hessian_route = gk.hessian;
    rep.lebowitz_spohn = gk.lebowitz_spohn;
    rep.kinetic =
        kinetic_coefficients(model.system, model.reservoirs, beta0, dzeta, tol);
    rep.fdt_covariance = cgf_hessian0(model, tol) / (beta0 * beta0);

    const RealMatrix& l = rep.green_kubo;
    rep.onsager_residual = (l - l.transpose()).cwiseAbs().maxCoeff();
    rep.column_residual = l.colwise().sum().cwiseAbs().maxCoeff();
    rep.fdt_residual = (rep.fdt_covariance - 2.0 * l).cwiseAbs().maxCoeff();
    rep.pairwise_residual =
        std::max({(rep.green_kubo - rep.hessian_route).cwiseAbs().maxCoeff(),
                  (rep.green_kubo - rep.kinetic).cwiseAbs().maxCoeff(),
                  (rep.green_kubo - rep.lebowitz_spohn).cwiseAbs().maxCoeff(),
                  (rep.hessian_route - rep.kinetic).cwiseAbs().maxCoeff()});
    return rep;
}

} // namespace qdsf
