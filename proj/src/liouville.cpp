// liouville.cpp — Implementation of the Liouville-space primitives

#include "qdsf/liouville.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qdsf {

int default_thread_count()
{
    if (const char* env = std::getenv("QDSFLUCT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? int(hw) : 1;
}

Vector vectorize(const Matrix& x)
{
    return Eigen::Map<const Vector>(x.data(), x.size());
}

Matrix devectorize(const Vector& v, Eigen::Index dim)
{
    if (v.size() != dim * dim) {
        throw std::invalid_argument("devectorize: vector length does not match dim^2");
    }
    return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

Complex hs_inner(const Matrix& x, const Matrix& y)
{
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw std::invalid_argument("hs_inner: dimension mismatch");
    }
    return (x.adjoint() * y).trace();
}

Superop sandwich(const Matrix& a, const Matrix& b)
{
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw std::invalid_argument("sandwich: operators must be square with matching dims");
    }
    return Eigen::kroneckerProduct(b.transpose(), a);
}

Superop superop_identity(Eigen::Index dim)
{
    return Superop::Identity(dim * dim, dim * dim);
}

Matrix apply_superop(const Superop& s, const Matrix& x)
{
    return devectorize(s * vectorize(x), x.rows());
}

Superop adjoint_superop(const Superop& s)
{
    return s.adjoint();
}

Superop rho_adjoint(const Superop& s, const Matrix& rho, const Tolerances& tol)
{
    check_faithful(rho, tol);
    const Matrix rho_inv = hermitian_power(rho, -1.0);
    return sandwich(Matrix::Identity(rho.rows(), rho.cols()), rho_inv) * s.adjoint() *
           sandwich(Matrix::Identity(rho.rows(), rho.cols()), rho);
}

bool is_hermitian(const Matrix& x, double tol)
{
    return (x - x.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Matrix hermitize(const Matrix& x)
{
    return 0.5 * (x + x.adjoint());
}

void check_density_matrix(const Matrix& rho, const Tolerances& tol)
{
    if (!is_hermitian(rho, tol.herm * std::max(1.0, rho.cwiseAbs().maxCoeff()))) {
        throw std::invalid_argument("state is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho));
    if (es.eigenvalues().minCoeff() < -tol.psd) {
        throw std::invalid_argument("state has a negative eigenvalue");
    }
    if (std::abs(rho.trace().real() - 1.0) > tol.trace || std::abs(rho.trace().imag()) > tol.trace) {
        throw std::invalid_argument("state trace differs from 1");
    }
}

void check_faithful(const Matrix& rho, const Tolerances& tol)
{
    if (rho.rows() != rho.cols()) {
        throw std::invalid_argument("state must be square");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(rho));
    if (es.eigenvalues().minCoeff() <= tol.faithful) {
        throw std::invalid_argument("state is not faithful");
    }
}

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> hermitian_eigensolver(const Matrix& x)
{
    if (x.rows() != x.cols()) {
        throw std::invalid_argument("expected a square Hermitian matrix");
    }
    return Eigen::SelfAdjointEigenSolver<Matrix>(hermitize(x));
}

} // namespace

Matrix hermitian_power(const Matrix& x, double a)
{
    auto es = hermitian_eigensolver(x);
    Eigen::VectorXd vals = es.eigenvalues();
    Vector powered(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) <= 0.0 && (a < 0.0 || std::floor(a) != a)) {
            throw std::invalid_argument("hermitian_power: non-positive eigenvalue");
        }
        powered(i) = std::pow(vals(i), a);
    }
    return es.eigenvectors() * powered.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix hermitian_log(const Matrix& x)
{
    auto es = hermitian_eigensolver(x);
    Eigen::VectorXd vals = es.eigenvalues();
    Vector logged(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) <= 0.0) {
            throw std::invalid_argument("hermitian_log: non-positive eigenvalue");
        }
        logged(i) = std::log(vals(i));
    }
    return es.eigenvectors() * logged.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix hermitian_exp(const Matrix& x)
{
    auto es = hermitian_eigensolver(x);
    Vector exped = es.eigenvalues().array().exp().matrix().cast<Complex>();
    return es.eigenvectors() * exped.asDiagonal() * es.eigenvectors().adjoint();
}

ClusteredSpectrum clustered_eigensystem(const Matrix& h, double tol_rel)
{
    auto es = hermitian_eigensolver(h);
    const Eigen::VectorXd vals = es.eigenvalues(); // ascending
    const Eigen::Index n = vals.size();
    const double diameter = std::max(vals(n - 1) - vals(0), 1.0);
    const double width = tol_rel * diameter;

    ClusteredSpectrum out;
    Eigen::Index start = 0;
    while (start < n) {
        Eigen::Index stop = start + 1;
        while (stop < n && vals(stop) - vals(stop - 1) <= width) ++stop;
        Matrix proj = Matrix::Zero(h.rows(), h.cols());
        double mean = 0.0;
        for (Eigen::Index i = start; i < stop; ++i) {
            proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
            mean += vals(i);
        }
        out.values.push_back(mean / double(stop - start));
        out.projections.push_back(std::move(proj));
        start = stop;
    }
    return out;
}

ModularData modular_superops(const Matrix& rho, const Tolerances& tol)
{
    check_faithful(rho, tol);
    const Eigen::Index d = rho.rows();

    ModularData out;
    out.delta = sandwich(rho, hermitian_power(rho, -1.0));

    ClusteredSpectrum spec = clustered_eigensystem(hermitian_log(rho), tol.bohr);
    const std::size_t n = spec.values.size();

    // Collect pairwise differences of log-eigenvalues and cluster them.
    std::vector<double> diffs;
    diffs.reserve(n * n);
    double dmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            diffs.push_back(spec.values[i] - spec.values[j]);
            dmax = std::max(dmax, std::abs(spec.values[i] - spec.values[j]));
        }
    }
    std::sort(diffs.begin(), diffs.end());
    const double width = tol.bohr * std::max(2.0 * dmax, 1.0);

    std::vector<double> omegas;
    std::size_t start = 0;
    while (start < diffs.size()) {
        std::size_t stop = start + 1;
        double sum = diffs[start];
        while (stop < diffs.size() && diffs[stop] - diffs[stop - 1] <= width) {
            sum += diffs[stop];
            ++stop;
        }
        omegas.push_back(sum / double(stop - start));
        start = stop;
    }

    for (double omega : omegas) {
        Superop p = Superop::Zero(d * d, d * d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (std::abs((spec.values[i] - spec.values[j]) - omega) <= width) {
                    p += sandwich(spec.projections[i], spec.projections[j]);
                }
            }
        }
        out.log_spectrum.emplace_back(omega, std::move(p));
    }
    return out;
}

SpectralPoint dominant_spectral_point(const Superop& s, const Tolerances& tol)
{
    const Eigen::Index n = s.rows();
    const Eigen::Index d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(n))));
    if (d * d != n) {
        throw std::invalid_argument("dominant_spectral_point: matrix is not d^2 x d^2");
    }

    Eigen::ComplexEigenSolver<Superop> es(s, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("dominant_spectral_point: eigensolver failed");
    }
    const Vector vals = es.eigenvalues();

    Eigen::Index top = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (vals(i).real() > vals(top).real()) top = i;
    }
    const Complex ell = vals(top);

    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    const double margin = tol.eig * scale;
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i == top) continue;
        const double dist = ell.real() - vals(i).real();
        if (dist <= margin) {
            throw NumericalError(
                "dominant_spectral_point: dominant eigenvalue is degenerate or not "
                "isolated on its line (ergodicity hypothesis violated)");
        }
        gap = std::min(gap, dist);
    }

    SpectralPoint out;
    out.value = ell;
    out.gap = gap;
    out.right_vec = devectorize(es.eigenvectors().col(top), d);

    // Rows of V^{-1} are left eigenvectors; row_top · col_top = 1 already.
    const Superop vinv = es.eigenvectors().inverse();
    out.left_vec = devectorize(vinv.row(top).adjoint(), d);

    const double resid_r =
        (s * vectorize(out.right_vec) - ell * vectorize(out.right_vec)).norm();
    const double resid_l =
        (s.adjoint() * vectorize(out.left_vec) - std::conj(ell) * vectorize(out.left_vec)).norm();
    if (resid_r > tol.eig * scale * 1e3 || resid_l > tol.eig * scale * 1e3) {
        throw NumericalError("dominant_spectral_point: eigenpair residual too large");
    }
    return out;
}

double spectral_bound(const Superop& s)
{
    Eigen::ComplexEigenSolver<Superop> es(s, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("spectral_bound: eigensolver failed");
    }
    return es.eigenvalues().real().maxCoeff();
}

std::vector<Complex> superop_spectrum(const Superop& s)
{
    Eigen::ComplexEigenSolver<Superop> es(s, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("superop_spectrum: eigensolver failed");
    }
    std::vector<Complex> out(es.eigenvalues().data(),
                             es.eigenvalues().data() + es.eigenvalues().size());
    return out;
}

Matrix semigroup_apply(const Superop& s, double t, const Matrix& x)
{
    if (t < 0.0) {
        throw std::invalid_argument("semigroup_apply: t must be non-negative");
    }
    if (t == 0.0) return x;
    const Superop e = (t * s).exp();
    return apply_superop(e, x);
}

Superop superop_exp(const Superop& s)
{
    return s.exp();
}

} // namespace qdsf
