#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oqe/quantum_operation.hpp"

namespace oqe {

/// System-environment state, pure vector or density matrix.
///
/// The composite index is system-major throughout the library:
/// index = s * D + e for system level s and environment level e.
struct SeState {
    Vector pure;  // length d * D when is_pure
    Matrix mixed; // (d * D) x (d * D) otherwise
    bool is_pure = true;

    static SeState from_pure(Vector psi);
    static SeState from_mixed(Matrix rho);

    /// Density-matrix view (outer product for the pure variant).
    Matrix density() const;
    long dim() const { return is_pure ? pure.size() : mixed.rows(); }
};

/// Hidden open-quantum-evolution model: an initial system-environment state
/// plus one system-environment unitary per step (or a single unitary with
/// the time-independent flag).
struct OqeModel {
    int d = 0; // system dimension
    int D = 0; // environment dimension
    SeState initial;
    bool time_independent = false;
    std::vector<Matrix> unitaries; // size k, or size 1 when time_independent
    std::uint64_t seed = 0;        // generator seed, echoed by serialization

    /// Step unitary U_{j:j-1} for j = 1..; time-independent models answer
    /// for any j.
    const Matrix& unitary(int j) const;

    /// Number of stored steps (unbounded horizon when time-independent).
    int stored_steps() const { return static_cast<int>(unitaries.size()); }

    bool supports_steps(int k) const {
        return time_independent || k <= stored_steps();
    }
};

/// All invariant violations, one message per finding; empty means valid.
std::vector<std::string> validation_errors(const OqeModel& model);

/// Throws ContractViolation listing every violated invariant.
void validate(const OqeModel& model);

/// Evolve the model for k steps with intervention ops[j] applied before the
/// (j+1)-th unitary; returns the reduced system state (d x d), exact dense
/// evaluation. Trace may drop below 1 for trace non-increasing operations.
Matrix simulate_process(const OqeModel& model, const std::vector<QuantumOperation>& ops,
                        int k);

/// Replace a mixed initial state by its purification: the environment is
/// enlarged by an external factor of dimension d*D (new environment index
/// e' = x * D + e) and every unitary acts as identity on that factor.
/// Pure-initial models are returned unchanged. The reduced system dynamics
/// is identical for every operation sequence.
OqeModel purify(const OqeModel& model);

/// An informationally complete set of d^4 operations (single-Kraus
/// preparation-measurement pairs plus the identity channel); the vectorized
/// Choi matrices span the full operation space.
std::vector<QuantumOperation> informationally_complete_ops(int d);

// --- random model generation -------------------------------------------------

struct ModelSpec {
    int d = 2;
    int D = 5;
    int k = 1;                    // stored steps when not time-independent
    double eta = 0.1;             // strength of exp(i * eta * H) step unitaries
    bool time_independent = true;
    bool mixed_initial = false;   // full-rank random initial density matrix
};

/// Seeded random model. Pure initial states are separable products
/// |psi_S> x |psi_E|; mixed ones are full-rank random density matrices.
OqeModel random_model(const ModelSpec& spec, Rng& rng);

} // namespace oqe
