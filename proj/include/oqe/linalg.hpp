#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "oqe/rng.hpp"

namespace oqe {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Relative threshold below which singular/eigenvalues count as zero.
inline constexpr double kRankRelTol = 1e-10;

struct SvdResult {
    Matrix u;
    RealVector singular_values; // sorted descending
    Matrix vh;
};

struct EigResult {
    RealVector values; // sorted descending
    Matrix vectors;    // column l pairs with values[l]
};

/// Thin SVD, a = u * diag(s) * vh.
SvdResult svd(const Matrix& a);

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// The input is symmetrized before decomposition and must be Hermitian within
/// `herm_tol`. Each eigenvector is phase-normalized so that its first
/// component of significant magnitude is real positive, which keeps
/// degenerate-spectrum consumers deterministic.
EigResult eig_hermitian(const Matrix& a, double herm_tol = 1e-10);

/// Eigenvalues of a general square matrix, sorted by modulus descending.
Vector eigenvalues_general(const Matrix& a);

/// Polar factor of `a`: the unitary minimizing the Frobenius distance to `a`.
/// Throws DegeneratePolar when `a` is numerically rank deficient.
Matrix nearest_unitary(const Matrix& a);

/// Kronecker product, index convention (i_a * rows_b + i_b).
Matrix kron(const Matrix& a, const Matrix& b);

/// Partial trace of `rho` over the factors not listed in `keep`.
///
/// `dims` are the tensor-factor dimensions, slowest index first (factor 0 is
/// the most significant digit of the row index). `keep` lists the factor
/// positions to retain, in increasing order.
Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep);

/// Uhlmann fidelity tr^2 sqrt(sqrt(rho) sigma sqrt(rho)) of two density
/// matrices (PSD, unit trace within 1e-8).
double fidelity(const Matrix& rho, const Matrix& sigma);

/// Fidelity computed from purifications: rho = ma * ma^dag, sigma = mb * mb^dag.
/// Equals fidelity(rho, sigma) but costs only O(n * r^2) for rank-r states.
double fidelity_from_purifications(const Matrix& ma, const Matrix& mb);

/// Renyi entropy (base 2) of a density matrix; gamma = 1 is the von Neumann
/// limit. Eigenvalues below 1e-14 are excluded from the logarithm.
double renyi_entropy(const Matrix& rho, double gamma);

/// Renyi entropy of a probability spectrum (convenience overload).
double renyi_entropy_of_spectrum(const RealVector& probs, double gamma);

// --- random object generators (Gaussian entries, unit variance per
// real component) -----------------------------------------------------------

Matrix random_hermitian(int dim, Rng& rng);

/// exp(i * eta * H) with H a random Hermitian matrix; eta = 0 gives identity.
Matrix random_unitary_exp(int dim, double eta, Rng& rng);

Vector random_pure_state(int dim, Rng& rng);

Matrix random_density_matrix(int dim, Rng& rng);

// --- small helpers ----------------------------------------------------------

/// Count of values >= rel_tol * max(values); input sorted or not.
int numerical_rank(const RealVector& values, double rel_tol = kRankRelTol);

double unitarity_error(const Matrix& u);
double hermiticity_error(const Matrix& a);

inline bool is_unitary(const Matrix& u, double tol = 1e-12) {
    return unitarity_error(u) <= tol;
}

} // namespace oqe
