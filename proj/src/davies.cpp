// davies.cpp — Construction of weak-coupling generators

#include "qdsf/davies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qdsf {

namespace {

constexpr double kPruneNorm = 1e-14;

double freq_match_tol(double omega)
{
    return 1e-9 * std::max(1.0, std::abs(omega));
}

} // namespace

SystemSpec make_system(const Matrix& h_sys, const Tolerances& tol)
{
    if (!is_hermitian(h_sys, tol.herm * std::max(1.0, h_sys.cwiseAbs().maxCoeff()))) {
        throw std::invalid_argument("make_system: H_S must be Hermitian");
    }
    SystemSpec sys;
    sys.h_sys = hermitize(h_sys);
    ClusteredSpectrum spec = clustered_eigensystem(sys.h_sys, tol.bohr);
    sys.levels = spec.values;
    sys.projections = spec.projections;

    double diameter = 1.0;
    for (double a : sys.levels) {
        for (double b : sys.levels) diameter = std::max(diameter, std::abs(a - b));
    }
    const double width = tol.bohr * 2.0 * diameter;
    std::vector<double> diffs;
    for (double a : sys.levels) {
        for (double b : sys.levels) diffs.push_back(a - b);
    }
    std::sort(diffs.begin(), diffs.end());
    std::size_t start = 0;
    while (start < diffs.size()) {
        std::size_t stop = start + 1;
        double sum = diffs[start];
        while (stop < diffs.size() && diffs[stop] - diffs[stop - 1] <= width) {
            sum += diffs[stop];
            ++stop;
        }
        sys.bohr.push_back(sum / double(stop - start));
        start = stop;
    }
    return sys;
}

RealVector WeakCouplingModel::betas() const
{
    RealVector out(reservoirs.size());
    for (std::size_t j = 0; j < reservoirs.size(); ++j) out(j) = reservoirs[j].beta;
    return out;
}

Matrix gibbs_state(const Matrix& h_sys, double beta)
{
    if (beta <= 0.0) {
        throw std::invalid_argument("gibbs_state: beta must be positive");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h_sys));
    const Eigen::VectorXd vals = es.eigenvalues();
    const double shift = vals.minCoeff();
    Eigen::VectorXd weights = (-beta * (vals.array() - shift)).exp();
    weights /= weights.sum();
    return es.eigenvectors() * weights.cast<Complex>().asDiagonal() *
           es.eigenvectors().adjoint();
}

std::vector<std::pair<double, Matrix>> jump_operators(const Matrix& q,
                                                      const SystemSpec& sys,
                                                      const Tolerances& tol)
{
    if (!is_hermitian(q, tol.herm * std::max(1.0, q.cwiseAbs().maxCoeff()))) {
        throw std::invalid_argument("jump_operators: coupling must be Hermitian");
    }
    std::vector<std::pair<double, Matrix>> out;
    for (double omega : sys.bohr) {
        Matrix v = Matrix::Zero(sys.dim(), sys.dim());
        for (std::size_t mu = 0; mu < sys.levels.size(); ++mu) {
            for (std::size_t nu = 0; nu < sys.levels.size(); ++nu) {
                if (std::abs((sys.levels[mu] - sys.levels[nu]) - omega) <=
                    freq_match_tol(omega)) {
                    v += sys.projections[nu] * q * sys.projections[mu];
                }
            }
        }
        out.emplace_back(omega, std::move(v));
    }
    return out;
}

SpectralTable SpectralTable::flat_form(double gamma)
{
    SpectralTable t;
    t.form = Form::flat;
    t.gamma = gamma;
    return t;
}

std::optional<Matrix> SpectralTable::lookup(double omega, Eigen::Index n,
                                            double match_tol) const
{
    if (form == Form::flat) {
        return Matrix(gamma * Matrix::Identity(n, n));
    }
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (std::abs(omegas[i] - omega) <= match_tol) return matrices[i];
    }
    return std::nullopt;
}

std::vector<std::pair<double, Matrix>> kms_complete(const SpectralTable& h_pos,
                                                    double beta, Eigen::Index n,
                                                    const std::vector<double>& needed,
                                                    const Tolerances& tol)
{
    if (h_pos.form == SpectralTable::Form::table) {
        for (double w : h_pos.omegas) {
            if (w < 0.0) {
                throw std::invalid_argument(
                    "kms_complete: h table must be given on omega >= 0 only");
            }
        }
        for (const Matrix& m : h_pos.matrices) {
            if (m.rows() != n || m.cols() != n) {
                throw std::invalid_argument("kms_complete: h matrix has wrong shape");
            }
            if (!is_hermitian(m, tol.herm * std::max(1.0, m.cwiseAbs().maxCoeff()))) {
                throw std::invalid_argument("kms_complete: h matrix is not Hermitian");
            }
            Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
            if (es.eigenvalues().minCoeff() < -tol.psd) {
                throw std::invalid_argument("kms_complete: h matrix is not PSD");
            }
        }
    }

    std::vector<std::pair<double, Matrix>> out;
    for (double omega : needed) {
        const double mag = std::abs(omega);
        const auto entry = h_pos.lookup(mag, n, freq_match_tol(mag));
        if (!entry) {
            std::ostringstream os;
            os << "kms_complete: missing h entry for frequency " << mag;
            throw std::invalid_argument(os.str());
        }
        if (omega >= 0.0) {
            out.emplace_back(omega, *entry);
        } else {
            // h(-ω) = e^{-βω} h(ω)^T for ω = |omega|
            out.emplace_back(omega, Matrix(std::exp(-beta * mag) * entry->transpose()));
        }
    }
    return out;
}

SubLindbladian build_sub(const SystemSpec& sys, const ReservoirSpec& res,
                         const Tolerances& tol)
{
    const Eigen::Index d = sys.dim();
    const Eigen::Index n = res.coupling_count();
    if (n == 0) {
        throw std::invalid_argument("build_sub: reservoir needs at least one coupling");
    }
    if (res.beta <= 0.0) {
        throw std::invalid_argument("build_sub: beta must be positive");
    }

    // V^{(k)}(ω) per coupling and Bohr frequency.
    std::vector<std::vector<Matrix>> v_of(res.couplings.size());
    for (Eigen::Index k = 0; k < n; ++k) {
        auto jumps = jump_operators(res.couplings[k], sys, tol);
        v_of[k].reserve(jumps.size());
        for (auto& [w, v] : jumps) v_of[k].push_back(std::move(v));
    }

    // Frequencies that actually carry jump content.
    std::vector<double> active;
    for (std::size_t wi = 0; wi < sys.bohr.size(); ++wi) {
        bool nonzero = false;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (v_of[k][wi].norm() > kPruneNorm) nonzero = true;
        }
        if (nonzero) active.push_back(sys.bohr[wi]);
    }

    const auto h_full = kms_complete(res.h, res.beta, n, active, tol);
    auto h_at = [&](double omega) -> const Matrix& {
        for (const auto& [w, m] : h_full) {
            if (std::abs(w - omega) <= freq_match_tol(omega)) return m;
        }
        throw std::logic_error("build_sub: internal h lookup failure");
    };
    auto v_at = [&](Eigen::Index k, double omega) -> const Matrix& {
        for (std::size_t wi = 0; wi < sys.bohr.size(); ++wi) {
            if (std::abs(sys.bohr[wi] - omega) <= freq_match_tol(omega)) return v_of[k][wi];
        }
        throw std::logic_error("build_sub: internal V lookup failure");
    };

    // Hamiltonian correction T = Σ_{klω} s^{(kl)}(ω) V^{(k)}(ω)† V^{(l)}(ω).
    Matrix t_op = Matrix::Zero(d, d);
    if (res.s) {
        for (double omega : sys.bohr) {
            const auto s_mat = res.s->lookup(omega, n, freq_match_tol(omega));
            if (!s_mat) continue;
            if (!is_hermitian(*s_mat, tol.herm * std::max(1.0, s_mat->cwiseAbs().maxCoeff()))) {
                throw std::invalid_argument("build_sub: s matrix is not Hermitian");
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                for (Eigen::Index l = 0; l < n; ++l) {
                    t_op += (*s_mat)(k, l) * v_at(k, omega).adjoint() * v_at(l, omega);
                }
            }
        }
        t_op = hermitize(t_op);
    }

    // Kraus family from the unitary diagonalization of h(ω):
    // h = Σ_m g_m w_m w_m†  ⇒  W_m(ω) = √g_m Σ_l conj(w_m^{(l)}) V^{(l)}(ω).
    KrausMap kraus;
    std::vector<std::pair<double, std::vector<Matrix>>> per_bohr; // ω_B -> W family
    for (double omega : active) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(h_at(omega)));
        std::vector<Matrix> family;
        for (Eigen::Index m = 0; m < n; ++m) {
            const double g = es.eigenvalues()(m);
            if (g <= kPruneNorm) continue;
            Matrix w = Matrix::Zero(d, d);
            for (Eigen::Index l = 0; l < n; ++l) {
                w += std::conj(es.eigenvectors()(l, m)) * v_at(l, omega);
            }
            w *= std::sqrt(g);
            if (w.norm() > kPruneNorm) family.push_back(std::move(w));
        }
        if (!family.empty()) {
            for (const Matrix& w : family) kraus.ops.push_back(w);
            per_bohr.emplace_back(omega, std::move(family));
        }
    }
    if (kraus.ops.empty()) {
        // Pure Hamiltonian correction; keep a zero Kraus operator so the map is defined.
        kraus.ops.push_back(Matrix::Zero(d, d));
    }

    // W-family reconstruction must reproduce Σ_{kl} h^{(kl)}(ω) V^{(k)†} X V^{(l)}.
    {
        Superop direct = Superop::Zero(d * d, d * d);
        for (double omega : active) {
            const Matrix& h = h_at(omega);
            for (Eigen::Index k = 0; k < n; ++k) {
                for (Eigen::Index l = 0; l < n; ++l) {
                    if (std::abs(h(k, l)) <= kPruneNorm) continue;
                    direct += h(k, l) * sandwich(v_at(k, omega).adjoint(), v_at(l, omega));
                }
            }
        }
        const double resid = (direct - kraus.to_superop(d)).cwiseAbs().maxCoeff();
        if (resid > tol.check * std::max(1.0, direct.cwiseAbs().maxCoeff())) {
            throw NumericalError("build_sub: Kraus reconstruction of Phi failed");
        }
    }

    SubLindbladian sub;
    sub.rho_ref = gibbs_state(sys.h_sys, res.beta);
    sub.lind = lindblad_generator(t_op, kraus, tol);

    // Modular parts keyed by entropy quantum β·ω_B.
    for (auto& [omega, family] : per_bohr) {
        ModularPart part;
        part.quantum = res.beta * omega;
        part.kraus.ops = std::move(family);
        sub.modular_parts.push_back(std::move(part));
    }
    std::sort(sub.modular_parts.begin(), sub.modular_parts.end(),
              [](const ModularPart& a, const ModularPart& b) { return a.quantum < b.quantum; });

    const PropertyReport db = detailed_balance_check(sub.rho_ref, sub.lind, tol);
    if (!db.passed) {
        throw NumericalError("build_sub: detailed balance fails against the Gibbs state (" +
                             db.details + ")");
    }
    return sub;
}

WeakCouplingModel assemble(const SystemSpec& sys,
                           const std::vector<ReservoirSpec>& reservoirs,
                           const Tolerances& tol)
{
    if (reservoirs.empty()) {
        throw std::invalid_argument("assemble: at least one reservoir required");
    }

    WeakCouplingModel model;
    model.system = sys;
    model.reservoirs = reservoirs;

    const Eigen::Index d = sys.dim();
    Matrix t_total = Matrix::Zero(d, d);
    KrausMap kraus_total;
    for (const ReservoirSpec& res : reservoirs) {
        SubLindbladian sub = build_sub(sys, res, tol);
        t_total += sub.lind.t_op;
        for (const Matrix& w : sub.lind.phi.ops) {
            if (w.norm() > kPruneNorm) kraus_total.ops.push_back(w);
        }
        model.subs.push_back(std::move(sub));
    }
    if (kraus_total.ops.empty()) kraus_total.ops.push_back(Matrix::Zero(d, d));
    model.total = lindblad_generator(t_total, kraus_total, tol);

    // Davies generators commute with the free evolution.
    const Matrix id = Matrix::Identity(d, d);
    const Superop l_sys = Complex(0, 1) * (sandwich(sys.h_sys, id) - sandwich(id, sys.h_sys));
    const double comm_resid =
        (model.total.generator * l_sys - l_sys * model.total.generator).cwiseAbs().maxCoeff();
    if (comm_resid > tol.check * std::max(1.0, model.total.generator.cwiseAbs().maxCoeff())) {
        throw NumericalError("assemble: generator does not commute with i[H_S,.]");
    }

    model.flags.kms = true;
    model.flags.er = positivity_improving_check(model.total, tol).passed;

    bool tri = true;
    const TimeReversal theta = TimeReversal::conjugation(d);
    for (const SubLindbladian& sub : model.subs) {
        if (!time_reversal_check(theta, sub.rho_ref, sub.lind, tol).passed) tri = false;
    }
    model.flags.tri = tri;
    return model;
}

PropertyReport spohn_condition(const std::vector<Matrix>& couplings,
                               const Matrix& h_sys, const Tolerances& tol)
{
    (void)tol;
    const Eigen::Index d = h_sys.rows();
    const Eigen::Index n2 = d * d;

    std::vector<Matrix> constraints = couplings;
    constraints.push_back(h_sys);

    Matrix stacked(n2 * Eigen::Index(constraints.size()), n2);
    const Matrix id = Matrix::Identity(d, d);
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const Superop comm = sandwich(constraints[i], id) - sandwich(id, constraints[i]);
        stacked.block(Eigen::Index(i) * n2, 0, n2, n2) = comm;
    }

    Eigen::JacobiSVD<Matrix> svd(stacked);
    const Eigen::VectorXd sv = svd.singularValues();
    const double threshold = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
    Eigen::Index null_dim = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= threshold) ++null_dim;
    }
    null_dim += n2 - sv.size(); // missing singular values count as zeros

    PropertyReport rep;
    rep.name = "spohn_condition";
    rep.passed = (null_dim == 1);
    rep.residual = double(null_dim - 1);
    rep.details = "joint commutant dimension " + std::to_string(null_dim);
    return rep;
}

} // namespace qdsf
