#include <doctest.h>

#include <cmath>

#include "oqe/errors.hpp"
#include "oqe/oqe_model.hpp"

using namespace oqe;

namespace {

OqeModel decoupled_model(int d, int D, const Matrix& us, const Matrix& ue,
                         const Vector& psi_s, const Vector& psi_e) {
    OqeModel m;
    m.d = d;
    m.D = D;
    m.time_independent = true;
    Vector psi(d * D);
    for (int s = 0; s < d; ++s)
        for (int e = 0; e < D; ++e) psi[s * D + e] = psi_s[s] * psi_e[e];
    m.initial = SeState::from_pure(psi);
    m.unitaries.push_back(kron(us, ue));
    return m;
}

} // namespace

TEST_CASE("validate: accepts a random model, reports scaled state and bad step") {
    Rng rng(1);
    OqeModel m = random_model({.d = 2, .D = 3, .k = 3, .eta = 0.5,
                               .time_independent = false, .mixed_initial = false},
                              rng);
    CHECK(validation_errors(m).empty());

    OqeModel scaled = m;
    scaled.initial.pure *= 2.0;
    const auto errs = validation_errors(scaled);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("norm") != std::string::npos);

    OqeModel bad = m;
    bad.unitaries[1] *= 1.5;
    const auto errs2 = validation_errors(bad);
    REQUIRE(errs2.size() == 1);
    CHECK(errs2[0].find("step 2") != std::string::npos);
    CHECK_THROWS_AS(validate(bad), ContractViolation);
}

TEST_CASE("simulate_process: k = 0 returns the reduced initial state") {
    Rng rng(2);
    OqeModel m = random_model({.d = 2, .D = 4, .k = 1, .eta = 1.0,
                               .time_independent = true, .mixed_initial = false},
                              rng);
    const Matrix rho0 = simulate_process(m, {}, 0);
    const Matrix expect = partial_trace(m.initial.density(), {2, 4}, {0});
    CHECK((rho0 - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("simulate_process: decoupled model evolves the system unitarily") {
    Rng rng(3);
    const Matrix us = random_unitary_exp(2, 1.0, rng);
    const Matrix ue = random_unitary_exp(3, 1.0, rng);
    const Vector psi_s = random_pure_state(2, rng);
    const Vector psi_e = random_pure_state(3, rng);
    const OqeModel m = decoupled_model(2, 3, us, ue, psi_s, psi_e);

    const int k = 4;
    std::vector<QuantumOperation> ids(k, QuantumOperation::identity(2));
    const Matrix rho_k = simulate_process(m, ids, k);

    Matrix usk = Matrix::Identity(2, 2);
    for (int i = 0; i < k; ++i) usk = us * usk;
    const Matrix expect = usk * (psi_s * psi_s.adjoint()) * usk.adjoint();
    CHECK((rho_k - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("simulate_process: decoupled dynamics ignores the environment state") {
    Rng rng(4);
    const Matrix us = random_unitary_exp(2, 1.0, rng);
    const Matrix ue = random_unitary_exp(3, 1.0, rng);
    const Vector psi_s = random_pure_state(2, rng);
    const Vector e1 = random_pure_state(3, rng);
    const Vector e2 = random_pure_state(3, rng);

    std::vector<QuantumOperation> ops;
    Rng oprng(5);
    for (int j = 0; j < 3; ++j) ops.push_back(random_channel(2, 2, oprng));

    const Matrix r1 = simulate_process(decoupled_model(2, 3, us, ue, psi_s, e1), ops, 3);
    const Matrix r2 = simulate_process(decoupled_model(2, 3, us, ue, psi_s, e2), ops, 3);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("simulate_process: trace preserved by channels, reduced by outcomes") {
    Rng rng(6);
    OqeModel m = random_model({.d = 2, .D = 5, .k = 4, .eta = 0.8,
                               .time_independent = false, .mixed_initial = false},
                              rng);
    std::vector<QuantumOperation> ops;
    for (int j = 0; j < 4; ++j) ops.push_back(random_channel(2, 3, rng));
    const Matrix rho = simulate_process(m, ops, 4);
    CHECK(std::abs(rho.trace().real() - 1.0) <= 1e-10);
    CHECK(hermiticity_error(rho) <= 1e-12);

    std::vector<QuantumOperation> sub = ops;
    sub[1] = sub[1].scaled(0.5);
    const Matrix rho_sub = simulate_process(m, sub, 4);
    const double tr = rho_sub.trace().real();
    CHECK(tr > 0.0);
    CHECK(tr < 1.0 + 1e-12);
}

TEST_CASE("simulate_process rejects a step-count mismatch") {
    Rng rng(7);
    OqeModel m = random_model({.d = 2, .D = 2, .k = 2, .eta = 1.0,
                               .time_independent = false, .mixed_initial = false},
                              rng);
    std::vector<QuantumOperation> ops(1, QuantumOperation::identity(2));
    CHECK_THROWS_AS((void)simulate_process(m, ops, 2), ShapeError);
    std::vector<QuantumOperation> ops3(3, QuantumOperation::identity(2));
    CHECK_THROWS_AS((void)simulate_process(m, ops3, 3), ShapeError);
}

TEST_CASE("purify: pure models pass through unchanged") {
    Rng rng(8);
    OqeModel m = random_model({.d = 2, .D = 3, .k = 1, .eta = 1.0,
                               .time_independent = true, .mixed_initial = false},
                              rng);
    const OqeModel p = purify(m);
    CHECK(p.D == m.D);
    CHECK((p.initial.pure - m.initial.pure).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("purify: Schmidt coefficients match the eigenvalues of the mixed state") {
    // rho = diag(0.75, 0.25) on a d=1, D=2 carrier keeps the arithmetic visible.
    OqeModel m;
    m.d = 1;
    m.D = 2;
    m.time_independent = true;
    Matrix rho = Matrix::Zero(2, 2);
    rho(0, 0) = 0.75;
    rho(1, 1) = 0.25;
    m.initial = SeState::from_mixed(rho);
    m.unitaries.push_back(Matrix::Identity(2, 2));

    const OqeModel p = purify(m);
    CHECK(p.D == 2 * 2); // external factor d*D = 2 times original D = 2
    // Schmidt spectrum across (external | original) split of the purification.
    Matrix amp(2, 2); // amp(x, e), system dimension is 1
    for (int x = 0; x < 2; ++x)
        for (int e = 0; e < 2; ++e) amp(x, e) = p.initial.pure[x * 2 + e];
    const SvdResult f = svd(amp);
    CHECK(f.singular_values[0] == doctest::Approx(std::sqrt(0.75)).epsilon(1e-12));
    CHECK(f.singular_values[1] == doctest::Approx(std::sqrt(0.25)).epsilon(1e-12));
}

TEST_CASE("purify: reduced dynamics is unchanged for random operation sequences") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        OqeModel m = random_model({.d = 2, .D = 2, .k = 3, .eta = 1.0,
                                   .time_independent = false, .mixed_initial = true},
                                  rng);
        const OqeModel p = purify(m);
        CHECK(p.D == m.d * m.D * m.D);
        std::vector<QuantumOperation> ops;
        for (int j = 0; j < 3; ++j) ops.push_back(random_subunital_operation(2, 2, rng));
        const Matrix a = simulate_process(m, ops, 3);
        const Matrix b = simulate_process(p, ops, 3);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("informationally_complete_ops: count, identity membership, Choi rank") {
    const auto ops = informationally_complete_ops(2);
    CHECK(ops.size() == 16);

    bool has_identity = false;
    for (const auto& op : ops)
        if (op.kraus().size() == 1 &&
            (op.kraus()[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0)
            has_identity = true;
    CHECK(has_identity);

    Matrix vecs(16, 16);
    for (int i = 0; i < 16; ++i) {
        const Matrix c = ops[static_cast<std::size_t>(i)].choi();
        for (int r = 0; r < 4; ++r)
            for (int s = 0; s < 4; ++s) vecs(i, r * 4 + s) = c(r, s);
    }
    const SvdResult f = svd(vecs);
    CHECK(numerical_rank(f.singular_values) == 16);
}

TEST_CASE("informationally_complete_ops spans for d = 3 as well") {
    const auto ops = informationally_complete_ops(3);
    CHECK(ops.size() == 81);
    Matrix vecs(81, 81);
    for (int i = 0; i < 81; ++i) {
        const Matrix c = ops[static_cast<std::size_t>(i)].choi();
        for (int r = 0; r < 9; ++r)
            for (int s = 0; s < 9; ++s) vecs(i, r * 9 + s) = c(r, s);
    }
    const SvdResult f = svd(vecs);
    CHECK(numerical_rank(f.singular_values) == 81);
}

TEST_CASE("quantum operations validate their Kraus sums") {
    Matrix too_big = 1.5 * Matrix::Identity(2, 2);
    CHECK_THROWS_AS(QuantumOperation(2, {too_big}), ContractViolation);
    const QuantumOperation id = QuantumOperation::identity(3);
    CHECK(id.trace_preserving());
    Rng rng(10);
    const QuantumOperation sub = random_subunital_operation(2, 2, rng);
    CHECK_FALSE(sub.trace_preserving());
}
