#pragma once

#include "oqe/process_tensor.hpp"
#include "oqe/unitary_params.hpp"

namespace oqe {

enum class FitMode { time_dependent, time_independent };

struct OptimizerSettings {
    int max_iterations = 5000;
    double gradient_tolerance = 1e-10;
    int restarts = 0;              // extra seeded starts beyond the site init
    double restart_spread = 0.1;   // parameter perturbation scale per restart
    std::uint64_t restart_seed = 12345;
};

struct ReconstructionProblem {
    Ppt target;
    FitMode mode = FitMode::time_dependent;
    int D = 0; // environment dimension; 0 derives it from the target bonds
    OptimizerSettings settings;
};

struct IterationRecord {
    int iteration = 0;
    double loss = 0.0;
    double gradient_norm = 0.0;
};

struct ReconstructedOqe {
    OqeModel model;    // recovered initial state plus step unitaries
    Matrix env_gauge;  // environment basis compensator (time-independent mode)
    double final_loss = 0.0;
    std::vector<IterationRecord> iterations;
};

/// Nearest-unitary initialization from the (re-canonicalized) target sites:
/// each site times sqrt(d) is embedded into a full dD x dD matrix (thin
/// bonds padded by deterministic orthonormal completion) and projected onto
/// the unitary manifold; the initial state comes from site 0. The
/// time-independent mode seeds its single unitary from site k-1.
ReconstructedOqe init_from_sites(const Ppt& target, FitMode mode, int D = 0);

/// Minimize || |Y(U_1..U_k)> - |target> ||^2 over the per-step unitaries
/// (initial state fixed by the site initialization).
ReconstructedOqe fit_time_dependent(const ReconstructionProblem& problem);

/// Minimize || (U^E x I) |Y(psi, U)> - |target> ||^2 over the initial-state
/// parameters, the shared step unitary, and the environment compensator.
ReconstructedOqe fit_time_independent(const ReconstructionProblem& problem);

/// Window process tensor of the recovered time-independent model.
ProcessTensorDense predict_future(const ReconstructedOqe& rec, int j, int m);

// --- loss/gradient engine, exposed for verification ------------------------

/// Pack of parameterized objects defining a candidate model: the first entry
/// parameterizes the initial state (its first column), then one entry per
/// step unitary (or a single shared one), and finally the environment
/// compensator in time-independent mode.
struct FitVariables {
    FitMode mode = FitMode::time_dependent;
    int d = 0;
    int D = 0;
    int k = 0;
    UnitaryParams state;              // dD x dD, column 0 is the state
    std::vector<UnitaryParams> steps; // k entries, or 1 when shared
    UnitaryParams env;                // D x D compensator (time-independent)
    bool optimize_state = false;
    // When set, the compensator is solved in closed form per evaluation (a
    // polar alignment problem) and excluded from the packed parameters.
    bool envelope_env = false;

    std::vector<double> pack() const;
    void unpack(const std::vector<double>& x);
};

double fit_loss(const Ppt& target, const FitVariables& vars);
std::vector<double> fit_gradient(const Ppt& target, const FitVariables& vars);

} // namespace oqe
