#pragma once

#include <vector>

#include "oqe/linalg.hpp"

namespace oqe {

/// A completely positive map on the system, stored as Kraus operators.
/// Trace non-increasing maps are allowed (sum K^dag K <= I), so a single
/// measurement outcome is representable; trace_preserving() reports whether
/// the sum equals identity within 1e-10.
class QuantumOperation {
  public:
    QuantumOperation(int d, std::vector<Matrix> kraus);

    static QuantumOperation identity(int d);

    int dim() const { return d_; }
    const std::vector<Matrix>& kraus() const { return kraus_; }
    bool trace_preserving() const { return trace_preserving_; }

    /// Apply to a system density matrix.
    Matrix apply(const Matrix& rho) const;

    /// Choi matrix C[(o, m), (o', m')] = sum_mu K[o, m] conj(K[o', m']),
    /// i.e. (Lambda x id) acting on the unnormalized maximally entangled state.
    Matrix choi() const;

    /// Scale by a nonnegative factor c <= 1 (stays completely positive and
    /// trace non-increasing); used by linearity checks.
    QuantumOperation scaled(double c) const;

  private:
    int d_;
    std::vector<Matrix> kraus_;
    bool trace_preserving_;
};

/// Random trace-preserving channel via a Stinespring isometry with
/// `n_kraus` environment outcomes.
QuantumOperation random_channel(int d, int n_kraus, Rng& rng);

/// Random trace non-increasing operation (a channel scaled by a uniform
/// factor in (0, 1]).
QuantumOperation random_subunital_operation(int d, int n_kraus, Rng& rng);

} // namespace oqe
