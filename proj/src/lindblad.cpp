// lindblad.cpp — Lindbladian structures and property checkers

#include "qdsf/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace qdsf {

namespace {

constexpr double kPruneNorm = 1e-14;

std::string fmt(double x)
{
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

} // namespace

Matrix KrausMap::apply(const Matrix& x) const
{
    if (ops.empty()) {
        throw std::invalid_argument("KrausMap: empty Kraus family");
    }
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (const Matrix& v : ops) out += v.adjoint() * x * v;
    return out;
}

Matrix KrausMap::phi_one() const
{
    if (ops.empty()) {
        throw std::invalid_argument("KrausMap: empty Kraus family");
    }
    Matrix out = Matrix::Zero(ops.front().rows(), ops.front().cols());
    for (const Matrix& v : ops) out += v.adjoint() * v;
    return out;
}

Superop KrausMap::to_superop(Eigen::Index d) const
{
    Superop out = Superop::Zero(d * d, d * d);
    for (const Matrix& v : ops) out += sandwich(v.adjoint(), v);
    return out;
}

Eigen::Index KrausMap::dim() const
{
    return ops.empty() ? 0 : ops.front().rows();
}

Lindbladian lindblad_generator(const Matrix& t_op, const KrausMap& phi,
                               const Tolerances& tol)
{
    const Eigen::Index d = t_op.rows();
    if (!is_hermitian(t_op, tol.herm * std::max(1.0, t_op.cwiseAbs().maxCoeff()))) {
        throw std::invalid_argument("lindblad_generator: T must be Hermitian");
    }
    if (phi.dim() != d) {
        throw std::invalid_argument("lindblad_generator: dimension mismatch between T and Phi");
    }

    Lindbladian out;
    out.t_op = t_op;
    out.phi = phi;
    out.dim = d;

    const Matrix id = Matrix::Identity(d, d);
    const Matrix phi1 = phi.phi_one();
    const Superop commutator =
        Complex(0, 1) * (sandwich(t_op, id) - sandwich(id, t_op));
    const Superop anticomm = -0.5 * (sandwich(phi1, id) + sandwich(id, phi1));
    out.generator = commutator + anticomm + phi.to_superop(d);
    return out;
}

Matrix dissipation(const Lindbladian& lind, const Matrix& x, const Matrix& y)
{
    const auto l = [&lind](const Matrix& z) { return apply_superop(lind.generator, z); };
    return l(x.adjoint() * y) - l(x.adjoint()) * y - x.adjoint() * l(y);
}

Matrix choi_matrix(const Superop& s)
{
    const Eigen::Index n = s.rows();
    const Eigen::Index d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(n))));
    Matrix choi = Matrix::Zero(n, n);
    Matrix e = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            e(i, j) = 1.0;
            const Matrix block = apply_superop(s, e);
            choi.block(i * d, j * d, d, d) = block;
            e(i, j) = 0.0;
        }
    }
    return choi;
}

PropertyReport choi_is_cp(const Superop& s, const Tolerances& tol)
{
    PropertyReport rep;
    rep.name = "complete_positivity";
    const Matrix choi = choi_matrix(s);
    const double herm_resid = (choi - choi.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(choi));
    const double min_eig = es.eigenvalues().minCoeff();
    rep.residual = std::max(0.0, -min_eig) + herm_resid;
    rep.passed = rep.residual <= tol.psd;
    rep.details = "min Choi eigenvalue " + fmt(min_eig) +
                  ", hermiticity residual " + fmt(herm_resid);
    return rep;
}

PropertyReport detailed_balance_check(const Matrix& rho, const Lindbladian& lind,
                                      const Tolerances& tol)
{
    check_faithful(rho, tol);
    PropertyReport rep;
    rep.name = "detailed_balance";

    const Matrix stat_resid = apply_superop(adjoint_superop(lind.generator), rho);
    const double r_stat = stat_resid.cwiseAbs().maxCoeff();

    const Superop phi = lind.phi.to_superop(lind.dim);
    const double r_phi = (rho_adjoint(phi, rho, tol) - phi).cwiseAbs().maxCoeff();

    rep.residual = std::max(r_stat, r_phi);
    rep.passed = rep.residual <= tol.check;
    rep.details = "|L†(rho)| = " + fmt(r_stat) + ", |Phi^rho - Phi| = " + fmt(r_phi);
    return rep;
}

namespace {

// Least-squares solve of i[T, X] = G(X); returns (T hermitized, residual).
std::pair<Matrix, double> solve_commutator(const Superop& g, Eigen::Index d)
{
    // Columns of the design matrix: superoperators i[E_ab, ·] stacked as vectors.
    const Eigen::Index n2 = d * d;
    Matrix design(n2 * n2, n2);
    const Matrix id = Matrix::Identity(d, d);
    Matrix e = Matrix::Zero(d, d);
    for (Eigen::Index a = 0; a < d; ++a) {
        for (Eigen::Index b = 0; b < d; ++b) {
            e(a, b) = 1.0;
            const Superop comm = Complex(0, 1) * (sandwich(e, id) - sandwich(id, e));
            design.col(a + d * b) = Eigen::Map<const Vector>(comm.data(), comm.size());
            e(a, b) = 0.0;
        }
    }
    const Vector target = Eigen::Map<const Vector>(g.data(), g.size());
    const Vector coeffs = design.colPivHouseholderQr().solve(target);
    const double resid = (design * coeffs - target).cwiseAbs().maxCoeff();
    Matrix t = devectorize(coeffs, d);
    t = hermitize(t);
    t -= (t.trace() / double(d)) * Matrix::Identity(d, d);
    return {t, resid};
}

} // namespace

NormalFormResult detailed_balance_normal_form(const Matrix& rho,
                                              const Lindbladian& lind,
                                              const Tolerances& tol)
{
    check_faithful(rho, tol);
    NormalFormResult out;

    const double stat = apply_superop(adjoint_superop(lind.generator), rho)
                            .cwiseAbs()
                            .maxCoeff();
    if (stat > tol.check) {
        throw std::invalid_argument("detailed_balance_normal_form: L†(rho) != 0");
    }

    const Superop l_rho = rho_adjoint(lind.generator, rho, tol);
    const Superop herm_part = 0.5 * (lind.generator - l_rho);

    auto [t_prime, comm_resid] = solve_commutator(herm_part, lind.dim);
    const double scale = std::max(1.0, lind.generator.cwiseAbs().maxCoeff());
    if (comm_resid > tol.check * scale) {
        out.ok = false;
        out.residual = comm_resid;
        out.details = "rho-antisymmetric part of L is not a commutator, residual " +
                      fmt(comm_resid);
        return out;
    }

    // Cesàro average over the modular group = block projection Σ_ω P_ω Ψ P_ω.
    const ModularData md = modular_superops(rho, tol);
    const Superop psi = lind.phi.to_superop(lind.dim);
    Superop xi = Superop::Zero(psi.rows(), psi.cols());
    for (const auto& [omega, p] : md.log_spectrum) xi += p * psi * p;
    const Superop phi_prime = 0.5 * (xi + rho_adjoint(xi, rho, tol));

    // Reconstruct L from (T', Φ') and compare.
    const Eigen::Index d = lind.dim;
    const Matrix id = Matrix::Identity(d, d);
    const Matrix phi1 = apply_superop(phi_prime, id);
    const Superop rebuilt = Complex(0, 1) * (sandwich(t_prime, id) - sandwich(id, t_prime)) -
                            0.5 * (sandwich(phi1, id) + sandwich(id, phi1)) + phi_prime;
    const double rebuild_resid = (rebuilt - lind.generator).cwiseAbs().maxCoeff();
    const double sa_resid = (rho_adjoint(phi_prime, rho, tol) - phi_prime).cwiseAbs().maxCoeff();

    out.residual = std::max({comm_resid, rebuild_resid, sa_resid});
    out.ok = out.residual <= tol.check * scale;
    out.t_op = t_prime;
    out.phi = phi_prime;
    out.details = "commutator residual " + fmt(comm_resid) + ", reconstruction residual " +
                  fmt(rebuild_resid) + ", rho-self-adjointness residual " + fmt(sa_resid);
    return out;
}

SubLindbladian modular_decompose(const Matrix& rho, const Lindbladian& lind,
                                 const Tolerances& tol)
{
    const PropertyReport db = detailed_balance_check(rho, lind, tol);
    if (!db.passed) {
        throw std::invalid_argument("modular_decompose: detailed balance violated (" +
                                    db.details + ")");
    }

    SubLindbladian out;
    out.rho_ref = rho;
    out.lind = lind;

    const ClusteredSpectrum spec = clustered_eigensystem(hermitian_log(rho), tol.bohr);
    const std::size_t n = spec.values.size();
    double dmax = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            dmax = std::max(dmax, std::abs(spec.values[i] - spec.values[j]));
        }
    }
    const double width = tol.bohr * 2.0 * dmax;

    // W_{m,ω} = Σ_{λ-μ=ω} P_λ V_m P_μ gives Φ_ω(X) = Σ_m W† X W.
    std::vector<ModularPart> parts;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double omega = spec.values[i] - spec.values[j];
            auto it = std::find_if(parts.begin(), parts.end(), [&](const ModularPart& p) {
                return std::abs(p.quantum - omega) <= width;
            });
            if (it == parts.end()) {
                parts.push_back({omega, {}});
            }
        }
    }
    std::sort(parts.begin(), parts.end(),
              [](const ModularPart& a, const ModularPart& b) { return a.quantum < b.quantum; });

    for (ModularPart& part : parts) {
        for (const Matrix& v : lind.phi.ops) {
            Matrix w = Matrix::Zero(lind.dim, lind.dim);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (std::abs((spec.values[i] - spec.values[j]) - part.quantum) <= width) {
                        w += spec.projections[i] * v * spec.projections[j];
                    }
                }
            }
            if (w.norm() > kPruneNorm) part.kraus.ops.push_back(std::move(w));
        }
    }
    parts.erase(std::remove_if(parts.begin(), parts.end(),
                               [](const ModularPart& p) { return p.kraus.ops.empty(); }),
                parts.end());

    out.modular_parts = std::move(parts);
    return out;
}

TimeReversal TimeReversal::conjugation(Eigen::Index dim)
{
    return TimeReversal{Matrix::Identity(dim, dim)};
}

Matrix TimeReversal::operator()(const Matrix& x) const
{
    return u * x.conjugate() * u.adjoint();
}

bool TimeReversal::involutive(double tol) const
{
    // θ² = U conj(U) must be the identity.
    return (u * u.conjugate() - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <=
           tol;
}

PropertyReport time_reversal_check(const TimeReversal& theta, const Matrix& rho,
                                   const Lindbladian& lind, const Tolerances& tol)
{
    check_faithful(rho, tol);
    if (!theta.involutive(tol.check)) {
        throw std::invalid_argument("time_reversal_check: theta is not involutive");
    }

    PropertyReport rep;
    rep.name = "time_reversal";

    const double state_resid = (theta(rho) - rho).cwiseAbs().maxCoeff();

    // Both sides are anti-linear; matrix units determine them.
    const Superop l_rho = rho_adjoint(lind.generator, rho, tol);
    const Eigen::Index d = lind.dim;
    double map_resid = 0.0;
    Matrix e = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            e(i, j) = 1.0;
            const Matrix lhs = apply_superop(l_rho, theta(e));
            const Matrix rhs = theta(apply_superop(lind.generator, e));
            map_resid = std::max(map_resid, (lhs - rhs).cwiseAbs().maxCoeff());
            e(i, j) = 0.0;
        }
    }

    rep.residual = std::max(state_resid, map_resid);
    rep.passed = rep.residual <= tol.check;
    rep.details = "|Theta(rho)-rho| = " + fmt(state_resid) +
                  ", |L^rho∘Theta - Theta∘L| = " + fmt(map_resid);
    return rep;
}

PropertyReport irreducible(const KrausMap& phi, Eigen::Index d, const Tolerances& tol)
{
    (void)tol;
    PropertyReport rep;
    rep.name = "irreducibility";

    std::vector<Matrix> generators;
    for (const Matrix& v : phi.ops) {
        if (v.norm() > kPruneNorm) generators.push_back(v);
    }

    const Eigen::Index n2 = d * d;
    // Accumulate vectorized words; rank via column-pivoted QR, threshold 1e-10.
    Matrix words(n2, 1);
    words.col(0) = vectorize(Matrix::Identity(d, d)).transpose();
    std::vector<Matrix> frontier = {Matrix::Identity(d, d)};

    auto rank_of = [](const Matrix& cols) {
        Eigen::ColPivHouseholderQR<Matrix> qr(cols);
        qr.setThreshold(1e-10);
        return qr.rank();
    };

    Eigen::Index rank = 1;
    for (Eigen::Index depth = 0; depth < n2 && rank < n2 && !frontier.empty(); ++depth) {
        std::vector<Matrix> next;
        for (const Matrix& w : frontier) {
            for (const Matrix& g : generators) {
                Matrix cand = w * g;
                if (cand.norm() <= kPruneNorm) continue;
                cand /= cand.norm();
                Matrix trial(n2, words.cols() + 1);
                trial << words, vectorize(cand);
                const Eigen::Index r = rank_of(trial);
                if (r > rank) {
                    words = std::move(trial);
                    rank = r;
                    next.push_back(std::move(cand));
                    if (rank == n2) break;
                }
            }
            if (rank == n2) break;
        }
        frontier = std::move(next);
    }

    rep.passed = (rank == n2);
    rep.residual = double(n2 - rank);
    rep.details = "generated algebra dimension " + std::to_string(rank) + " of " +
                  std::to_string(n2);
    return rep;
}

PropertyReport positivity_improving_check(const Lindbladian& lind, const Tolerances& tol)
{
    PropertyReport rep;
    rep.name = "positivity_improving";

    const PropertyReport irr = irreducible(lind.phi, lind.dim, tol);

    // Numerical witness: e^{L}(|ψ><ψ|) must be strictly positive.
    const Superop prop = superop_exp(lind.generator);
    double min_eig = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(0x9d2c5680u);
    std::normal_distribution<double> dist(0.0, 1.0);

    std::vector<Vector> probes;
    for (Eigen::Index i = 0; i < lind.dim; ++i) {
        Vector e = Vector::Zero(lind.dim);
        e(i) = 1.0;
        probes.push_back(e);
    }
    for (int k = 0; k < 20; ++k) {
        Vector v(lind.dim);
        for (Eigen::Index i = 0; i < lind.dim; ++i) v(i) = Complex(dist(rng), dist(rng));
        probes.push_back(v / v.norm());
    }

    for (const Vector& psi : probes) {
        const Matrix proj = psi * psi.adjoint();
        const Matrix evolved = hermitize(apply_superop(prop, proj));
        Eigen::SelfAdjointEigenSolver<Matrix> es(evolved);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }

    const bool witness_ok = min_eig > tol.psd;
    rep.passed = irr.passed && witness_ok;
    rep.residual = std::max(0.0, -min_eig);
    rep.details = irr.details + "; min probe eigenvalue of e^{L}(|psi><psi|) = " +
                  fmt(min_eig);
    return rep;
}

} // namespace qdsf
