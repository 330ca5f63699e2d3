#pragma once

#include <vector>

#include "oqe/oqe_model.hpp"

namespace oqe {

/// Site tensor of a purified process tensor for one step: a list of
/// chi_left x chi_right matrices labeled by the packed physical index
/// q = o * d + i (output index slower, matching the dense layout).
struct PptSite {
    int d = 0;
    int chi_left = 0;
    int chi_right = 0;
    std::vector<Matrix> mats; // size d * d

    const Matrix& mat(int i, int o) const { return mats[o * d + i]; }
    Matrix& mat(int i, int o) { return mats[o * d + i]; }
};

/// Purified process tensor in MPS form.
///
/// site0 is the d x chi_0 reshape of the initial system-environment state;
/// site j >= 1 holds (1/sqrt(d)) times the slices of the step unitary, so
/// that every site is right-canonical and the total state has unit norm.
/// The compensating factor d per step is restored by predict_state.
///
/// Dense layouts (row-major, last index fastest):
///   purified state: (alpha_k, o_k, i_{k-1}, o_{k-1}, ..., i_0, o_0)
///   process tensor: (o_k, i_{k-1}, o_{k-1}, ..., i_0, o_0) x same primed
struct PurifiedProcessTensor {
    int d = 0;
    int k = 0;
    Matrix site0;               // d x chi_0
    std::vector<PptSite> sites; // sites[j - 1] describes step j
    bool normalized = true;

    int bond_dim(int j) const; // chi_j for j = 0..k
    long phys_dim() const;     // d^{2k+1}
};

using Ppt = PurifiedProcessTensor;

/// Dense multi-time process tensor (Hermitian, PSD, unit trace).
struct ProcessTensorDense {
    int d = 0;
    int k = 0;
    Matrix m; // dimension d^{2k+1}
};

/// Cap on the composite physical dimension d^{2k+1} of dense representations.
inline constexpr long kDenseLimit = 1L << 20;

long dense_phys_dim(int d, int k);

/// Site tensor (1/sqrt(d)) * <o b| U |i a> of a step unitary; right- and
/// left-canonical by unitarity.
PptSite site_from_unitary(const Matrix& u, int d, int D);

/// MPS form of the k-step purified process tensor of a model (pure initial
/// state required; purify() mixed models first).
Ppt build_ppt(const OqeModel& model, int k);

/// Dense purified state of the model built the circuit way: attach a
/// maximally entangled input-output pair per step and apply the step unitary
/// to the (output, environment) registers. Independent of build_ppt; equals
/// its dense contraction entrywise.
Vector build_circuit_state(const OqeModel& model, int k);

/// Dense purified state of an MPS (layout documented on the struct).
Vector dense_state(const Ppt& ppt);

/// N x chi_k matrix M with the dense process tensor equal to M M^dag.
Matrix purification_matrix(const Ppt& ppt);

/// Trace out the environment index of the purified state.
ProcessTensorDense to_dense(const Ppt& ppt, long dense_limit = kDenseLimit);

/// Contract an operation sequence into the process tensor; equals
/// simulate_process of the generating model within numerical accuracy.
Matrix predict_state(const Ppt& ppt, const std::vector<QuantumOperation>& ops);

/// m-step window process tensor starting at step j, with identity
/// interventions contracted into steps 0..j-1.
ProcessTensorDense reduced_window(const OqeModel& model, int j, int m,
                                  long dense_limit = kDenseLimit);
ProcessTensorDense reduced_window(const Ppt& ppt, int j, int m,
                                  long dense_limit = kDenseLimit);

/// Uhlmann fidelity of two dense process tensors of equal shape.
double process_fidelity(const ProcessTensorDense& a, const ProcessTensorDense& b);

/// Process-tensor fidelity computed from the purifications of two PPTs;
/// equals process_fidelity(to_dense(a), to_dense(b)) at low-rank cost.
double ppt_process_fidelity(const Ppt& a, const Ppt& b);

/// Right-canonical MPS decomposition of a dense purified state with
/// environment dimension env_dim (relative rank truncation at rel_tol).
Ppt mps_from_dense(const Vector& state, int d, int k, int env_dim,
                   double rel_tol = kRankRelTol);

/// Re-canonicalize an MPS (right-canonical sweep with rank truncation).
Ppt right_canonicalize(const Ppt& ppt, double rel_tol = kRankRelTol);

/// Apply a unitary on the final environment index (site k right bond);
/// leaves the dense process tensor invariant.
void apply_env_gauge(Ppt& ppt, const Matrix& g);

/// Max-norm residual of the right-canonical condition at site j >= 1.
double canonical_residual(const Ppt& ppt, int j);

/// MPS inner product <a|b> (requires equal physical and environment shapes).
cplx overlap(const Ppt& a, const Ppt& b);

} // namespace oqe
