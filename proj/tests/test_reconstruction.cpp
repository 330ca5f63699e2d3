#include <doctest.h>

#include <cmath>

#include "oqe/errors.hpp"
#include "oqe/reconstruction.hpp"
#include "oqe/tomography.hpp"

using namespace oqe;

namespace {

OqeModel paper_model(std::uint64_t seed, int d, int D, double eta = 0.1) {
    Rng rng(seed);
    return random_model({.d = d, .D = D, .k = 1, .eta = eta,
                         .time_independent = true, .mixed_initial = false},
                        rng);
}

OqeModel time_dep_model(std::uint64_t seed, int d, int D, int k) {
    Rng rng(seed);
    OqeModel m = random_model({.d = d, .D = D, .k = k, .eta = 1.0,
                               .time_independent = false, .mixed_initial = false},
                              rng);
    m.initial = SeState::from_pure(random_pure_state(d * D, rng));
    return m;
}

/// Gauge-obscured exact target: the dense purified state with a seeded
/// environment rotation, re-decomposed into a right-canonical MPS with
/// Schmidt-basis bonds (the same gauge class a tomography run produces).
Ppt gauged_target(const OqeModel& model, int k, std::uint64_t gauge_seed) {
    Ppt ppt = build_ppt(model, k);
    Rng rng(gauge_seed);
    apply_env_gauge(ppt, random_unitary_exp(model.D, 1.0, rng));
    return mps_from_dense(dense_state(ppt), model.d, k, model.D);
}

FitVariables random_variables(FitMode mode, int d, int D, int k, Rng& rng) {
    FitVariables vars;
    vars.mode = mode;
    vars.d = d;
    vars.D = D;
    vars.k = k;
    vars.optimize_state = mode == FitMode::time_independent;
    const int n = d * D;
    auto rand_params = [&](int dim) {
        UnitaryParams p = UnitaryParams::zero(dim);
        for (auto& a : p.angles) a = 2.0 * (rng.uniform() - 0.5);
        for (auto& f : p.phases) f = 2.0 * (rng.uniform() - 0.5);
        return p;
    };
    vars.state = rand_params(n);
    const int distinct = mode == FitMode::time_independent ? 1 : k;
    for (int e = 0; e < distinct; ++e) vars.steps.push_back(rand_params(n));
    vars.env = rand_params(D);
    return vars;
}

} // namespace

TEST_CASE("fit gradients match central finite differences") {
    Rng rng(1);
    for (const FitMode mode : {FitMode::time_dependent, FitMode::time_independent}) {
        const OqeModel m = time_dep_model(2, 2, 2, 3);
        const Ppt target = build_ppt(m, 3);
        for (int point = 0; point < 5; ++point) {
            FitVariables vars = random_variables(mode, 2, 2, 3, rng);
            const std::vector<double> x = vars.pack();
            const std::vector<double> g = fit_gradient(target, vars);
            REQUIRE(g.size() == x.size());

            const double h = 1e-6;
            double worst_rel = 0.0;
            for (std::size_t i = 0; i < x.size(); i += 7) { // sample coordinates
                std::vector<double> up = x, dn = x;
                up[i] += h;
                dn[i] -= h;
                FitVariables vu = vars, vd = vars;
                vu.unpack(up);
                vd.unpack(dn);
                const double fd =
                    (fit_loss(target, vu) - fit_loss(target, vd)) / (2.0 * h);
                const double scale = std::max({1.0, std::abs(fd), std::abs(g[i])});
                worst_rel = std::max(worst_rel, std::abs(fd - g[i]) / scale);
            }
            CHECK(worst_rel <= 1e-6);
        }
    }
}

TEST_CASE("loss vanishes at the true parameters") {
    const OqeModel m = time_dep_model(3, 2, 3, 3);
    const Ppt target = build_ppt(m, 3);

    FitVariables vars;
    vars.mode = FitMode::time_dependent;
    vars.d = 2;
    vars.D = 3;
    vars.k = 3;
    vars.optimize_state = false;
    Matrix w(6, 6);
    {
        // Complete the initial state to a unitary for the state slot.
        Vector psi = m.initial.pure;
        Matrix u = Matrix::Zero(6, 6);
        u.col(0) = psi;
        // Deterministic completion via params round trip is unnecessary here:
        // project [psi | canonical columns] with Gram-Schmidt.
        int filled = 1;
        for (int c = 0; c < 6 && filled < 6; ++c) {
            Vector v = Vector::Zero(6);
            v[c] = 1.0;
            for (int mcol = 0; mcol < filled; ++mcol)
                v -= u.col(mcol) * (u.col(mcol).adjoint() * v)(0, 0);
            if (v.norm() > 1e-6) u.col(filled++) = v / v.norm();
        }
        w = u;
    }
    vars.state = params_from_unitary(w);
    for (int j = 1; j <= 3; ++j)
        vars.steps.push_back(params_from_unitary(m.unitary(j)));
    CHECK(fit_loss(target, vars) <= 1e-20);
}

TEST_CASE("init_from_sites on a clean target reproduces the process tensor") {
    const OqeModel m = time_dep_model(4, 2, 3, 3);
    const Ppt target = build_ppt(m, 3);
    const ReconstructedOqe rec = init_from_sites(target, FitMode::time_dependent);
    CHECK(rec.model.D == 3);
    validate(rec.model);
    const Ppt rebuilt = build_ppt(rec.model, 3);
    CHECK(1.0 - ppt_process_fidelity(target, rebuilt) <= 1e-10);
}

TEST_CASE("init_from_sites pads thin bonds into full unitaries") {
    const OqeModel m = paper_model(5, 2, 5);
    // Separable initial state: bond 0 has dimension 1 after truncation.
    const Ppt target = mps_from_dense(dense_state(build_ppt(m, 3)), 2, 3, 5);
    CHECK(target.bond_dim(0) == 1);
    const ReconstructedOqe rec = init_from_sites(target, FitMode::time_dependent, 5);
    validate(rec.model);
    for (const Matrix& u : rec.model.unitaries) CHECK(unitarity_error(u) <= 1e-10);
    const Ppt rebuilt = build_ppt(rec.model, 3);
    CHECK(1.0 - ppt_process_fidelity(target, rebuilt) <= 1e-8);
}

TEST_CASE("site initialization beats random starts on a perturbed target") {
    const OqeModel m = time_dep_model(6, 2, 2, 3);
    Ppt target = build_ppt(m, 3);
    // Perturb the target state slightly and re-canonicalize.
    Vector v = dense_state(target);
    Rng prng(7);
    for (long i = 0; i < v.size(); ++i)
        v[i] += 1e-3 * cplx(prng.gaussian(), prng.gaussian());
    v /= v.norm();
    // Truncate the noise-inflated bonds back to the physical rank.
    target = mps_from_dense(v, 2, 3, 2, /*rel_tol=*/0.1);

    const ReconstructedOqe init = init_from_sites(target, FitMode::time_dependent, 2);
    FitVariables init_vars;
    init_vars.mode = FitMode::time_dependent;
    init_vars.d = 2;
    init_vars.D = 2;
    init_vars.k = 3;
    init_vars.optimize_state = false;
    init_vars.state =
        params_from_unitary(Matrix::Identity(4, 4)); // replaced below
    {
        Vector psi = init.model.initial.pure;
        Matrix u = Matrix::Zero(4, 4);
        u.col(0) = psi;
        int filled = 1;
        for (int c = 0; c < 4 && filled < 4; ++c) {
            Vector w = Vector::Zero(4);
            w[c] = 1.0;
            for (int mcol = 0; mcol < filled; ++mcol)
                w -= u.col(mcol) * (u.col(mcol).adjoint() * w)(0, 0);
            if (w.norm() > 1e-6) u.col(filled++) = w / w.norm();
        }
        init_vars.state = params_from_unitary(u);
    }
    for (const Matrix& u : init.model.unitaries)
        init_vars.steps.push_back(params_from_unitary(u));
    const double init_loss = fit_loss(target, init_vars);

    Rng rng(8);
    int better = 0;
    const int trials = 9;
    for (int t = 0; t < trials; ++t) {
        FitVariables rv = random_variables(FitMode::time_dependent, 2, 2, 3, rng);
        rv.state = init_vars.state; // state is fixed in this mode
        if (init_loss < fit_loss(target, rv)) ++better;
    }
    CHECK(better > trials / 2); // median comparison
}

TEST_CASE("time-independent init seeds from the second-to-last site") {
    // A time-dependent generator makes the sites distinct, so the seeding
    // convention is observable: the embedded site k-1 is its unitary exactly.
    const OqeModel m = time_dep_model(31, 2, 3, 4);
    const Ppt target = build_ppt(m, 4);
    const ReconstructedOqe rec = init_from_sites(target, FitMode::time_independent, 3);
    CHECK((rec.model.unitaries[0] - m.unitary(3)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("decoupled dynamics fits exactly with a trivial environment") {
    Rng rng(32);
    OqeModel m;
    m.d = 2;
    m.D = 3;
    m.time_independent = true;
    const Vector psi_s = random_pure_state(2, rng);
    const Vector psi_e = random_pure_state(3, rng);
    Vector psi(6);
    for (int s = 0; s < 2; ++s)
        for (int e = 0; e < 3; ++e) psi[s * 3 + e] = psi_s[s] * psi_e[e];
    m.initial = SeState::from_pure(psi);
    m.unitaries.push_back(
        kron(random_unitary_exp(2, 1.0, rng), random_unitary_exp(3, 1.0, rng)));

    // The gauged target truncates to bond dimension 1 everywhere, so the fit
    // runs with a one-dimensional environment.
    ReconstructionProblem problem;
    problem.target = gauged_target(m, 3, 33);
    problem.mode = FitMode::time_independent;
    const ReconstructedOqe rec = fit_time_independent(problem);
    CHECK(rec.model.D == 1);
    CHECK(rec.final_loss <= 1e-12);
    for (int j : {0, 4, 9}) {
        const double infid =
            1.0 - process_fidelity(reduced_window(m, j, 3), predict_future(rec, j, 3));
        CHECK(infid <= 1e-9);
    }
}

TEST_CASE("time-dependent fit: clean target converges to machine-level loss") {
    const OqeModel m = time_dep_model(9, 2, 3, 3);
    ReconstructionProblem problem;
    problem.target = build_ppt(m, 3);
    problem.mode = FitMode::time_dependent;
    const ReconstructedOqe rec = fit_time_dependent(problem);
    CHECK(rec.final_loss <= 1e-12);
    for (const Matrix& u : rec.model.unitaries) CHECK(unitarity_error(u) <= 1e-10);

    // Loss is non-increasing across accepted iterations.
    for (std::size_t i = 1; i < rec.iterations.size(); ++i)
        CHECK(rec.iterations[i].loss <= rec.iterations[i - 1].loss + 1e-18);
}

TEST_CASE("time-dependent fit tracks a noisy tomography target") {
    const OqeModel m = time_dep_model(10, 2, 2, 4);
    auto fit_infidelity = [&](double eps) {
        SimulatorOracle oracle(m, 4, eps);
        const TomographyResult tr = run_tomography(oracle, plan(2, 4, 2));
        ReconstructionProblem problem;
        problem.target = tr.ppt;
        problem.mode = FitMode::time_dependent;
        problem.D = 2;
        const ReconstructedOqe rec = fit_time_dependent(problem);
        const Ppt truth = build_ppt(m, 4);
        const Ppt fitted = build_ppt(rec.model, 4);
        return 1.0 - ppt_process_fidelity(truth, fitted);
    };
    const double clean = fit_infidelity(0.0);
    const double noisy = fit_infidelity(1e-4);
    CHECK(clean <= 1e-8);
    MESSAGE("clean fit infidelity: ", clean, ", eps=1e-4 fit infidelity: ", noisy);
    CHECK(noisy <= std::max(10.0 * std::max(clean, 1e-12), 1e-2));
}

TEST_CASE("time-independent fit recovers a gauged exact target") {
    const OqeModel m = paper_model(11, 2, 5, 0.1);
    ReconstructionProblem problem;
    problem.target = gauged_target(m, 3, 99);
    problem.mode = FitMode::time_independent;
    problem.D = 5;
    problem.settings.max_iterations = 5000;
    const ReconstructedOqe rec = fit_time_independent(problem);
    MESSAGE("TI fit final loss: ", rec.final_loss);

    // Extrapolation quality across future windows.
    double worst = 0.0;
    for (int j : {0, 5, 10, 20}) {
        const ProcessTensorDense truth = reduced_window(m, j, 3);
        const ProcessTensorDense pred = predict_future(rec, j, 3);
        worst = std::max(worst, 1.0 - process_fidelity(truth, pred));
    }
    MESSAGE("TI fit worst window infidelity (j <= 20): ", worst);
    CHECK(rec.final_loss <= 1e-6);
    CHECK(worst <= 1e-4);
}

TEST_CASE("environment gauge injection does not change the reachable loss") {
    const OqeModel m = paper_model(12, 2, 3, 0.2);
    ReconstructionProblem problem;
    problem.target = gauged_target(m, 3, 100);
    problem.mode = FitMode::time_independent;
    problem.D = 3;
    const ReconstructedOqe rec = fit_time_independent(problem);

    // Inject one more environment unitary into the target and refit.
    ReconstructionProblem regauged = problem;
    Ppt t2 = problem.target;
    Rng rng(101);
    apply_env_gauge(t2, random_unitary_exp(t2.bond_dim(t2.k), 1.0, rng));
    regauged.target = t2;
    const ReconstructedOqe rec2 = fit_time_independent(regauged);
    CHECK(std::abs(rec.final_loss - rec2.final_loss) <= 1e-8);
}

TEST_CASE("predict_future: j = 0 matches the fit target, decoupled is exact") {
    const OqeModel m = paper_model(13, 2, 3, 0.3);
    ReconstructionProblem problem;
    problem.target = gauged_target(m, 3, 102);
    problem.mode = FitMode::time_independent;
    problem.D = 3;
    const ReconstructedOqe rec = fit_time_independent(problem);
    const ProcessTensorDense target_dense = to_dense(problem.target);
    const ProcessTensorDense back = predict_future(rec, 0, 3);
    CHECK(1.0 - process_fidelity(target_dense, back) <=
          std::max(1e-8, 10.0 * rec.final_loss));

    CHECK_THROWS_AS((void)predict_future(init_from_sites(problem.target,
                                                         FitMode::time_dependent),
                                         0, 2),
                    ContractViolation);
}
