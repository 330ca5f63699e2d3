#include "oqe/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

std::string shape_str(const Matrix& a) {
    std::ostringstream os;
    os << a.rows() << "x" << a.cols();
    return os.str();
}

} // namespace

SvdResult svd(const Matrix& a) {
    // Jacobi is the more accurate kernel; fall back to BDC for larger blocks.
    SvdResult out;
    if (std::min(a.rows(), a.cols()) <= 32) {
        Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (solver.info() != Eigen::Success)
            throw NumericalFailure("SVD did not converge for " + shape_str(a) + " matrix");
        out.u = solver.matrixU();
        out.singular_values = solver.singularValues();
        out.vh = solver.matrixV().adjoint();
    } else {
        Eigen::BDCSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (solver.info() != Eigen::Success)
            throw NumericalFailure("SVD did not converge for " + shape_str(a) + " matrix");
        out.u = solver.matrixU();
        out.singular_values = solver.singularValues();
        out.vh = solver.matrixV().adjoint();
    }
    return out;
}

EigResult eig_hermitian(const Matrix& a, double herm_tol) {
    if (a.rows() != a.cols())
        throw ShapeError("eig_hermitian expects a square matrix, got " + shape_str(a));
    const double herm_err = hermiticity_error(a);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (herm_err > herm_tol * scale)
        throw ContractViolation("matrix is not Hermitian: max |a - a^dag| = " +
                                std::to_string(herm_err));
    const Matrix sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("Hermitian eigensolver failed for " + shape_str(a) + " matrix");

    const int n = static_cast<int>(a.rows());
    EigResult out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending order; flip to descending (stable: distinct
    // positions keep their relative order under exact ties).
    for (int l = 0; l < n; ++l) {
        out.values[l] = solver.eigenvalues()[n - 1 - l];
        out.vectors.col(l) = solver.eigenvectors().col(n - 1 - l);
    }
    // Deterministic phase: first significant component made real positive.
    for (int l = 0; l < n; ++l) {
        const double vmax = out.vectors.col(l).cwiseAbs().maxCoeff();
        for (int i = 0; i < n; ++i) {
            const cplx c = out.vectors(i, l);
            if (std::abs(c) > 1e-8 * vmax) {
                out.vectors.col(l) *= std::conj(c) / std::abs(c);
                break;
            }
        }
    }
    return out;
}

Vector eigenvalues_general(const Matrix& a) {
    if (a.rows() != a.cols())
        throw ShapeError("eigenvalues_general expects a square matrix, got " + shape_str(a));
    Eigen::ComplexEigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("eigensolver failed for " + shape_str(a) + " matrix");
    Vector vals = solver.eigenvalues();
    std::sort(vals.data(), vals.data() + vals.size(),
              [](const cplx& x, const cplx& y) { return std::abs(x) > std::abs(y); });
    return vals;
}

Matrix nearest_unitary(const Matrix& a) {
    if (a.rows() != a.cols())
        throw ShapeError("nearest_unitary expects a square matrix, got " + shape_str(a));
    const SvdResult f = svd(a);
    const double smax = f.singular_values.size() ? f.singular_values[0] : 0.0;
    const double smin = f.singular_values.size()
                            ? f.singular_values[f.singular_values.size() - 1]
                            : 0.0;
    if (smax <= 0.0 || smin < kRankRelTol * smax)
        throw DegeneratePolar("polar factor undefined: matrix is numerically rank "
                              "deficient (smin/smax = " +
                              std::to_string(smax > 0 ? smin / smax : 0.0) + ")");
    return f.u * f.vh;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep) {
    const int nfac = static_cast<int>(dims.size());
    long total = 1;
    for (int d : dims) {
        if (d < 1) throw ShapeError("partial_trace: factor dimensions must be >= 1");
        total *= d;
    }
    if (rho.rows() != total || rho.cols() != total)
        throw ShapeError("partial_trace: matrix is " + shape_str(rho) +
                         " but factors multiply to " + std::to_string(total));
    std::vector<bool> kept(nfac, false);
    for (int k : keep) {
        if (k < 0 || k >= nfac) throw ShapeError("partial_trace: keep index out of range");
        kept[k] = true;
    }

    long keep_dim = 1, trace_dim = 1;
    for (int f = 0; f < nfac; ++f) (kept[f] ? keep_dim : trace_dim) *= dims[f];

    // Strides of each factor in the flat index (slowest factor first).
    std::vector<long> stride(nfac);
    long s = 1;
    for (int f = nfac - 1; f >= 0; --f) {
        stride[f] = s;
        s *= dims[f];
    }

    // Base offsets for every kept-subsystem index and every traced index.
    std::vector<long> keep_offsets(keep_dim, 0), trace_offsets(trace_dim, 0);
    {
        long reps = 1;
        for (int f = 0; f < nfac; ++f) {
            if (!kept[f]) continue;
            const long block = keep_dim / (reps * dims[f]);
            for (long i = 0; i < keep_dim; ++i) {
                const long digit = (i / block) % dims[f];
                keep_offsets[i] += digit * stride[f];
            }
            reps *= dims[f];
        }
        reps = 1;
        for (int f = 0; f < nfac; ++f) {
            if (kept[f]) continue;
            const long block = trace_dim / (reps * dims[f]);
            for (long i = 0; i < trace_dim; ++i) {
                const long digit = (i / block) % dims[f];
                trace_offsets[i] += digit * stride[f];
            }
            reps *= dims[f];
        }
    }

    Matrix out = Matrix::Zero(keep_dim, keep_dim);
    for (long r = 0; r < keep_dim; ++r)
        for (long c = 0; c < keep_dim; ++c) {
            cplx acc = 0.0;
            for (long t = 0; t < trace_dim; ++t)
                acc += rho(keep_offsets[r] + trace_offsets[t],
                           keep_offsets[c] + trace_offsets[t]);
            out(r, c) = acc;
        }
    return out;
}

namespace {

void check_density_matrix(const Matrix& rho, const char* who) {
    if (rho.rows() != rho.cols())
        throw ShapeError(std::string(who) + ": density matrix must be square");
    if (std::abs(rho.trace().real() - 1.0) > 1e-8 || std::abs(rho.trace().imag()) > 1e-8)
        throw ContractViolation(std::string(who) + ": trace is not 1 within 1e-8");
    const EigResult e = eig_hermitian(rho, 1e-8);
    if (e.values.minCoeff() < -1e-8)
        throw ContractViolation(std::string(who) + ": negative eigenvalue " +
                                std::to_string(e.values.minCoeff()));
}

} // namespace

double fidelity(const Matrix& rho, const Matrix& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw ShapeError("fidelity: operands have different shapes");
    check_density_matrix(rho, "fidelity");
    check_density_matrix(sigma, "fidelity");

    const EigResult er = eig_hermitian(rho, 1e-8);
    RealVector sq = er.values.cwiseMax(0.0).cwiseSqrt();
    const Matrix sqrt_rho = er.vectors * sq.asDiagonal() * er.vectors.adjoint();
    const Matrix inner = sqrt_rho * sigma * sqrt_rho;
    const EigResult ei = eig_hermitian(inner, 1e-6);
    double acc = 0.0;
    for (int i = 0; i < ei.values.size(); ++i)
        acc += std::sqrt(std::max(0.0, ei.values[i]));
    return std::min(1.0, acc * acc);
}

double fidelity_from_purifications(const Matrix& ma, const Matrix& mb) {
    if (ma.rows() != mb.rows())
        throw ShapeError("fidelity_from_purifications: purifications live in "
                         "different spaces");
    const Matrix gram = ma.adjoint() * mb;
    const SvdResult f = svd(gram);
    const double nuclear = f.singular_values.sum();
    return std::min(1.0, nuclear * nuclear);
}

double renyi_entropy_of_spectrum(const RealVector& probs, double gamma) {
    if (gamma <= 0.0)
        throw DomainError("renyi_entropy: gamma must be > 0, got " + std::to_string(gamma));
    constexpr double cutoff = 1e-14;
    if (std::abs(gamma - 1.0) < 1e-12) {
        double h = 0.0;
        for (int i = 0; i < probs.size(); ++i) {
            const double p = probs[i];
            if (p > cutoff) h -= p * std::log2(p);
        }
        return std::max(0.0, h);
    }
    double z = 0.0;
    for (int i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (p > cutoff) z += std::pow(p, gamma);
    }
    if (z <= 0.0) return 0.0;
    return std::max(0.0, std::log2(z) / (1.0 - gamma));
}

double renyi_entropy(const Matrix& rho, double gamma) {
    if (gamma <= 0.0)
        throw DomainError("renyi_entropy: gamma must be > 0, got " + std::to_string(gamma));
    const EigResult e = eig_hermitian(rho, 1e-8);
    return renyi_entropy_of_spectrum(e.values, gamma);
}

Matrix random_hermitian(int dim, Rng& rng) {
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.gaussian_complex();
    return 0.5 * (g + g.adjoint());
}

Matrix random_unitary_exp(int dim, double eta, Rng& rng) {
    const Matrix h = random_hermitian(dim, rng);
    const EigResult e = eig_hermitian(h);
    Vector phases(dim);
    for (int i = 0; i < dim; ++i)
        phases[i] = std::exp(cplx(0.0, eta * e.values[i]));
    return e.vectors * phases.asDiagonal() * e.vectors.adjoint();
}

Vector random_pure_state(int dim, Rng& rng) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.gaussian_complex();
    const double n = v.norm();
    if (n == 0.0) return random_pure_state(dim, rng);
    return v / n;
}

Matrix random_density_matrix(int dim, Rng& rng) {
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.gaussian_complex();
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return rho;
}

int numerical_rank(const RealVector& values, double rel_tol) {
    if (values.size() == 0) return 0;
    const double vmax = values.cwiseAbs().maxCoeff();
    if (vmax <= 0.0) return 0;
    int r = 0;
    for (int i = 0; i < values.size(); ++i)
        if (values[i] >= rel_tol * vmax) ++r;
    return r;
}

double unitarity_error(const Matrix& u) {
    if (u.rows() != u.cols()) return 1.0;
    const Matrix g = u.adjoint() * u - Matrix::Identity(u.cols(), u.cols());
    return g.cwiseAbs().maxCoeff();
}

double hermiticity_error(const Matrix& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

} // namespace oqe
