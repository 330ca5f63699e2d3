#pragma once

#include "oqe/process_tensor.hpp"

namespace oqe {

/// Transfer matrix T = sum_q conj(B^q) kron B^q of a bond-square site tensor.
/// Its left action drives the effective-environment recursion; the spectral
/// radius of a canonical site is at most 1 with I/D a two-sided fixed point.
struct TransferMatrix {
    int D = 0;
    Matrix m; // D^2 x D^2
};

/// Effective environment state after a step: D x D, PSD, unit trace.
struct EffectiveEnvState {
    int D = 0;
    Matrix rho;
};

/// Build the transfer matrix of a site with equal bonds; requires the
/// right-canonical residual to be below 1e-8.
TransferMatrix transfer_matrix(const PptSite& site);

/// Eigenvalues of T sorted by modulus, largest first.
Vector spectrum(const TransferMatrix& t);

/// One application of the recursion rho -> sum_q (B^q)^dag rho B^q.
Matrix transfer_left_apply(const PptSite& site, const Matrix& rho);

/// rho^E_j: trace out the system from the initial site, then apply the
/// left transfer action of sites 1..j.
EffectiveEnvState effective_env_state(const Ppt& ppt, int j);

/// Schmidt coefficients of the purified state at bond j, descending. These
/// are propagated through a factorization of rho^E_j (one SVD per step), so
/// small coefficients are resolved to machine precision rather than to the
/// square-rooted eigenvalue noise floor.
RealVector bond_schmidt_values(const Ppt& ppt, int j);

/// Probability spectrum at bond j: squared Schmidt coefficients, equal to
/// the eigenvalues of rho^E_j.
RealVector bond_probability_spectrum(const Ppt& ppt, int j);

/// Memory size: numerical Schmidt rank at bond j (relative threshold 1e-10
/// on the Schmidt coefficients).
int memory_size(const Ppt& ppt, int j);

/// Memory complexity: Renyi-gamma entropy (bits) of the step-j reduced
/// process tensor, evaluated through the bond spectrum.
double memory_complexity(const Ppt& ppt, int j, double gamma);

/// Dominant left fixed point of the transfer map, by power iteration of the
/// recursion.
Matrix dominant_fixed_point_power(const PptSite& site, double tol = 1e-14,
                                  int max_iter = 100000);

/// Dominant left fixed point from the dense eigendecomposition of T
/// (Hermitized, unit trace).
Matrix dominant_fixed_point_dense(const TransferMatrix& t);

struct Theorem1Report {
    bool conclusive = false;   // dominant transfer eigenvalue non-degenerate
    bool mixed_init = false;
    int horizon = 0;
    double gamma = 1.0;

    double dominant_modulus = 0.0;
    double subdominant_modulus = 0.0;
    double spectral_radius = 0.0;
    bool radius_ok = false;             // radius <= 1 + 1e-10
    double left_fixed_residual = 0.0;   // |T_left(I/D) - I/D|_max
    double right_fixed_residual = 0.0;  // |T_right(I/D) - I/D|_max

    double c0 = 0.0;                    // initial-state entropy (mixed only)
    double predicted_complexity = 0.0;  // log2(D) (+ c0 when mixed)
    int predicted_size = 0;             // D, or d D^2 when mixed
    double observed_complexity = 0.0;   // at the horizon
    int observed_size = 0;
    double complexity_gap = 0.0;
    double mixed_limit_residual = 0.0;  // |rho^E'_H - sum lambda^2 |x><x| x I/D|
};

/// Run the recursion to `horizon` for a time-independent model and compare
/// the observed memory size/complexity against the predicted limits, along
/// with the supporting spectral checks. A degenerate dominant transfer
/// eigenvalue marks the report inconclusive rather than failing.
Theorem1Report theorem1_check(const OqeModel& model, int horizon,
                              double gamma = 1.0);

struct MetricSweepRow {
    int j = 0;
    int memory_size = 0;
    double complexity = 0.0;
    double gamma = 1.0;
    double predicted_limit = 0.0; // complexity limit per the fixed point
    std::uint64_t seed = 0;
};

/// Memory metrics for j = 0..horizon in one pass over the recursion.
std::vector<MetricSweepRow> metric_sweep(const OqeModel& model, int horizon,
                                         double gamma);

} // namespace oqe
