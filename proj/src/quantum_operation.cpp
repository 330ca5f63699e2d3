#include "oqe/quantum_operation.hpp"

#include <cmath>

#include "oqe/errors.hpp"

namespace oqe {

QuantumOperation::QuantumOperation(int d, std::vector<Matrix> kraus)
    : d_(d), kraus_(std::move(kraus)) {
    if (d_ < 1) throw ShapeError("QuantumOperation: dimension must be >= 1");
    if (kraus_.empty()) throw ShapeError("QuantumOperation: empty Kraus list");
    Matrix sum = Matrix::Zero(d_, d_);
    for (const Matrix& k : kraus_) {
        if (k.rows() != d_ || k.cols() != d_)
            throw ShapeError("QuantumOperation: Kraus operator is not d x d");
        sum += k.adjoint() * k;
    }
    const EigResult e = eig_hermitian(sum, 1e-8);
    if (e.values.maxCoeff() > 1.0 + 1e-10)
        throw ContractViolation("QuantumOperation: sum K^dag K exceeds identity "
                                "(max eigenvalue " +
                                std::to_string(e.values.maxCoeff()) + ")");
    trace_preserving_ =
        (sum - Matrix::Identity(d_, d_)).cwiseAbs().maxCoeff() <= 1e-10;
}

QuantumOperation QuantumOperation::identity(int d) {
    return QuantumOperation(d, {Matrix::Identity(d, d)});
}

Matrix QuantumOperation::apply(const Matrix& rho) const {
    if (rho.rows() != d_ || rho.cols() != d_)
        throw ShapeError("QuantumOperation::apply: state dimension mismatch");
    Matrix out = Matrix::Zero(d_, d_);
    for (const Matrix& k : kraus_) out += k * rho * k.adjoint();
    return out;
}

Matrix QuantumOperation::choi() const {
    Matrix c = Matrix::Zero(d_ * d_, d_ * d_);
    for (const Matrix& k : kraus_) {
        Vector v(d_ * d_);
        for (int o = 0; o < d_; ++o)
            for (int m = 0; m < d_; ++m) v[o * d_ + m] = k(o, m);
        c += v * v.adjoint();
    }
    return c;
}

QuantumOperation QuantumOperation::scaled(double c) const {
    if (c < 0.0 || c > 1.0)
        throw DomainError("QuantumOperation::scaled: factor must be in [0, 1]");
    std::vector<Matrix> ks = kraus_;
    const double r = std::sqrt(c);
    for (Matrix& k : ks) k *= r;
    return QuantumOperation(d_, std::move(ks));
}

QuantumOperation random_channel(int d, int n_kraus, Rng& rng) {
    if (n_kraus < 1) throw DomainError("random_channel: need at least one Kraus term");
    // Stinespring: the first d columns of a Haar-ish unitary on C^{d * n_kraus}
    // form an isometry; its blocks are the Kraus operators.
    const Matrix u = random_unitary_exp(d * n_kraus, 1.0, rng);
    std::vector<Matrix> ks(n_kraus, Matrix::Zero(d, d));
    for (int mu = 0; mu < n_kraus; ++mu)
        for (int o = 0; o < d; ++o)
            for (int m = 0; m < d; ++m) ks[mu](o, m) = u(o * n_kraus + mu, m);
    return QuantumOperation(d, std::move(ks));
}

QuantumOperation random_subunital_operation(int d, int n_kraus, Rng& rng) {
    const QuantumOperation ch = random_channel(d, n_kraus, rng);
    const double c = 0.05 + 0.95 * rng.uniform();
    return ch.scaled(c);
}

} // namespace oqe
