#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "oqe/process_tensor.hpp"

namespace oqe {

/// Window bookkeeping for the disentangling sweep. kappa is the number of
/// sites each gate acts on, chosen so that d^{2(kappa-1)} >= D_bound; the
/// sweep builds gates at window starts 0..f with f = k - kappa + 1.
struct TomographyPlan {
    int d = 0;
    int k = 0;
    int D_bound = 0;
    int kappa = 0;
    int f = 0;
};

TomographyPlan plan(int d, int k, int D_bound);

struct CostEstimate {
    long tomography_runs = 0;  // k - kappa + 2
    long window_dim = 0;       // d^{2 kappa}
    long real_parameters = 0;  // runs * d^{4 kappa}
};

CostEstimate cost_estimate(const TomographyPlan& plan);

/// Disentangling gate for the window starting at site j: maps the l-th
/// eigenvector of the window density (descending eigenvalues) to the l-th
/// computational basis state, so states supported on at most d^{2(kappa-1)}
/// eigenvectors leave the first window site in |0>.
struct Disentangler {
    int window_start = 0;
    Matrix gate; // unitary; dimension = product of the window site dims
};

/// Window basis convention shared by densities and gates: the first window
/// site is the most significant digit ("sweep order").
Disentangler build_disentangler(const Matrix& rho_window, const TomographyPlan& plan,
                                int j);

/// Measurement access to the purified state of an experiment. Local window
/// tomography and gate application are the only primitives the
/// reconstruction pipeline uses.
class MeasurementOracle {
  public:
    virtual ~MeasurementOracle() = default;
    virtual int d() const = 0;
    virtual int steps() const = 0;
    /// Reduced density matrix of sites first..last in sweep order; with
    /// noise level epsilon > 0 a depolarized copy (1-eps) rho + eps I/dim.
    virtual Matrix window_density(int first, int last) = 0;
    virtual void apply_window_gate(int first, int last, const Matrix& gate) = 0;
    /// Probability that sites 0..last are all in |0>.
    virtual double prefix_zero_weight(int last) const = 0;
};

/// Dense state-vector simulator backing the oracle interface.
class SimulatorOracle final : public MeasurementOracle {
  public:
    SimulatorOracle(const OqeModel& model, int k, double epsilon = 0.0);

    int d() const override { return d_; }
    int steps() const override { return k_; }
    Matrix window_density(int first, int last) override;
    void apply_window_gate(int first, int last, const Matrix& gate) override;
    double prefix_zero_weight(int last) const override;

    const Vector& state() const { return state_; }
    int env_dim() const { return env_dim_; }

  private:
    int d_ = 0;
    int k_ = 0;
    int env_dim_ = 0;
    double epsilon_ = 0.0;
    Vector state_;
};

struct WindowRecord {
    int window_start = 0;
    RealVector spectrum;   // window density eigenvalues, descending
    double leakage = 0.0;  // 1 - prefix zero weight after this gate
};

struct TomographyTranscript {
    int d = 0;
    int k = 0;
    int D_bound = 0;
    int kappa = 0;
    int f = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::vector<WindowRecord> windows;
    RealVector final_spectrum; // tail window eigenvalues
    double final_leakage = 0.0;
    int retained_env = 0;
};

struct TomographyResult {
    Ppt ppt;
    TomographyTranscript transcript;
};

/// Full pipeline: disentangling sweep, tail spectrum readout with the
/// environment basis fixed to computational states, classical inverse gates,
/// and a right-canonical MPS decomposition of the result. Throws
/// DBoundTooSmall when more than 1e-6 of the weight fails to disentangle.
TomographyResult run_tomography(MeasurementOracle& oracle, const TomographyPlan& plan);

} // namespace oqe
