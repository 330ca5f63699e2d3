#include <doctest.h>

#include <cmath>

#include "oqe/errors.hpp"
#include "oqe/linalg.hpp"

using namespace oqe;

namespace {

Matrix random_complex(int rows, int cols, Rng& rng) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.gaussian_complex();
    return m;
}

} // namespace

TEST_CASE("svd: identity and diagonal cases") {
    const Matrix id = Matrix::Identity(3, 3);
    const SvdResult f = svd(id);
    for (int i = 0; i < 3; ++i) CHECK(f.singular_values[i] == doctest::Approx(1.0));

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 3.0;
    const SvdResult g = svd(diag);
    CHECK(g.singular_values[0] == doctest::Approx(3.0));
    CHECK(g.singular_values[1] == doctest::Approx(0.0));
}

TEST_CASE("svd: random 4x4 reconstruction and ordering") {
    Rng rng(11);
    const Matrix a = random_complex(4, 4, rng);
    const SvdResult f = svd(a);
    const Matrix back = f.u * f.singular_values.asDiagonal() * f.vh;
    const double smax = f.singular_values[0];
    CHECK((back - a).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, smax));
    for (int i = 0; i + 1 < 4; ++i)
        CHECK(f.singular_values[i] >= f.singular_values[i + 1]);
    CHECK(unitarity_error(f.u) <= 1e-12);
    CHECK(unitarity_error(f.vh.adjoint()) <= 1e-12);
}

TEST_CASE("eig_hermitian: diagonal, degenerate, and residual checks") {
    Matrix d2 = Matrix::Zero(2, 2);
    d2(0, 0) = 0.2;
    d2(1, 1) = 0.8;
    const EigResult e = eig_hermitian(d2);
    CHECK(e.values[0] == doctest::Approx(0.8));
    CHECK(e.values[1] == doctest::Approx(0.2));

    const Matrix mixed = Matrix::Identity(5, 5) / 5.0;
    const EigResult em = eig_hermitian(mixed);
    for (int i = 0; i < 5; ++i) CHECK(em.values[i] == doctest::Approx(0.2));

    Rng rng(7);
    const Matrix h = random_hermitian(6, rng);
    const EigResult eh = eig_hermitian(h);
    for (int l = 0; l < 6; ++l) {
        const Vector r = h * eh.vectors.col(l) - eh.values[l] * eh.vectors.col(l);
        CHECK(r.cwiseAbs().maxCoeff() <= 1e-10);
    }
    for (int l = 0; l + 1 < 6; ++l) CHECK(eh.values[l] >= eh.values[l + 1]);
}

TEST_CASE("eig_hermitian: rejects a clearly non-Hermitian matrix") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS((void)eig_hermitian(a), ContractViolation);
}

TEST_CASE("eig_hermitian: eigenvector phases are deterministic") {
    Rng rng(21);
    const Matrix h = random_hermitian(4, rng);
    const EigResult a = eig_hermitian(h);
    const EigResult b = eig_hermitian(h);
    CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);
    // First significant component real positive.
    for (int l = 0; l < 4; ++l) {
        const double vmax = a.vectors.col(l).cwiseAbs().maxCoeff();
        for (int i = 0; i < 4; ++i) {
            const cplx c = a.vectors(i, l);
            if (std::abs(c) > 1e-8 * vmax) {
                CHECK(c.imag() == doctest::Approx(0.0).epsilon(1e-12));
                CHECK(c.real() > 0.0);
                break;
            }
        }
    }
}

TEST_CASE("nearest_unitary: fixed point, diagonal, and contraction property") {
    Rng rng(3);
    const Matrix u0 = random_unitary_exp(4, 1.0, rng);
    CHECK((nearest_unitary(u0) - u0).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = 0.5;
    CHECK((nearest_unitary(diag) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <=
          1e-12);

    // A perturbed unitary projects back closer than the perturbation left it.
    const Matrix noise = 1e-2 * random_complex(4, 4, rng);
    const Matrix a = u0 + noise;
    const Matrix w = nearest_unitary(a);
    CHECK(unitarity_error(w) <= 1e-12);
    CHECK((w - u0).norm() < (a - u0).norm());

    CHECK_THROWS_AS((void)nearest_unitary(Matrix::Zero(3, 3)), DegeneratePolar);
}

TEST_CASE("nearest_unitary is idempotent on unitaries") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const Matrix u = random_unitary_exp(3 + trial % 3, 1.0, rng);
        const Matrix w = nearest_unitary(u);
        CHECK((nearest_unitary(w) - w).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("partial_trace: product states, entangled pair, trace preservation") {
    Rng rng(13);
    const Matrix rho_a = random_density_matrix(2, rng);
    const Matrix rho_b = random_density_matrix(3, rng);
    const Matrix prod = kron(rho_a, rho_b);
    CHECK((partial_trace(prod, {2, 3}, {0}) - rho_a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((partial_trace(prod, {2, 3}, {1}) - rho_b).cwiseAbs().maxCoeff() <= 1e-12);

    Vector bell = Vector::Zero(4);
    bell[0] = 1.0 / std::sqrt(2.0);
    bell[3] = 1.0 / std::sqrt(2.0);
    const Matrix rho_bell = bell * bell.adjoint();
    const Matrix half = Matrix::Identity(2, 2) / 2.0;
    CHECK((partial_trace(rho_bell, {2, 2}, {0}) - half).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((partial_trace(rho_bell, {2, 2}, {1}) - half).cwiseAbs().maxCoeff() <= 1e-12);

    const Matrix rho = random_density_matrix(6, rng);
    const Matrix red = partial_trace(rho, {2, 3}, {0});
    CHECK(std::abs(red.trace().real() - rho.trace().real()) <= 1e-12);
    CHECK(hermiticity_error(red) <= 1e-12);
}

TEST_CASE("partial_trace composes over factors") {
    Rng rng(17);
    const Matrix rho = random_density_matrix(2 * 3 * 2, rng);
    const Matrix two_step =
        partial_trace(partial_trace(rho, {2, 3, 2}, {0, 1}), {2, 3}, {0});
    const Matrix one_step = partial_trace(rho, {2, 3, 2}, {0});
    CHECK((two_step - one_step).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("partial_trace rejects inconsistent dimensions") {
    CHECK_THROWS_AS((void)partial_trace(Matrix::Identity(5, 5), {2, 3}, {0}),
                    ShapeError);
}

TEST_CASE("fidelity: identical, orthogonal, and the I/2 vs |0><0| value") {
    Rng rng(23);
    const Matrix rho = random_density_matrix(3, rng);
    CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));

    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1.0;
    p1(1, 1) = 1.0;
    CHECK(fidelity(p0, p1) == doctest::Approx(0.0).epsilon(1e-12));

    // Closed form for commuting diagonal states: F = (sum_i sqrt(p_i q_i))^2
    //   = (sqrt(1/2))^2 = 1/2.
    const Matrix half = Matrix::Identity(2, 2) / 2.0;
    CHECK(fidelity(half, p0) == doctest::Approx(0.5).epsilon(1e-10));

    const Matrix sigma = random_density_matrix(3, rng);
    CHECK(fidelity(rho, sigma) == doctest::Approx(fidelity(sigma, rho)).epsilon(1e-9));
}

TEST_CASE("fidelity rejects non-states") {
    const Matrix not_normalized = 2.0 * Matrix::Identity(2, 2);
    CHECK_THROWS_AS((void)fidelity(not_normalized, not_normalized), ContractViolation);
}

TEST_CASE("fidelity_from_purifications matches the dense route") {
    Rng rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix ma(6, 2), mb(6, 3);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 2; ++j) ma(i, j) = rng.gaussian_complex();
            for (int j = 0; j < 3; ++j) mb(i, j) = rng.gaussian_complex();
        }
        ma /= std::sqrt((ma * ma.adjoint()).trace().real());
        mb /= std::sqrt((mb * mb.adjoint()).trace().real());
        const double dense = fidelity(ma * ma.adjoint(), mb * mb.adjoint());
        const double lowrank = fidelity_from_purifications(ma, mb);
        CHECK(lowrank == doctest::Approx(dense).epsilon(1e-8));
    }
}

TEST_CASE("renyi_entropy: pure, maximally mixed, and closed-form values") {
    Matrix pure = Matrix::Zero(3, 3);
    pure(0, 0) = 1.0;
    for (double gamma : {0.5, 1.0, 2.0, 3.0})
        CHECK(renyi_entropy(pure, gamma) == doctest::Approx(0.0).epsilon(1e-12));

    const Matrix mixed = Matrix::Identity(5, 5) / 5.0;
    CHECK(renyi_entropy(mixed, 1.0) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));

    Matrix rho = Matrix::Zero(2, 2);
    rho(0, 0) = 0.75;
    rho(1, 1) = 0.25;
    CHECK(renyi_entropy(rho, 2.0) ==
          doctest::Approx(-std::log2(0.625)).epsilon(1e-12));

    CHECK_THROWS_AS((void)renyi_entropy(rho, 0.0), DomainError);
    CHECK_THROWS_AS((void)renyi_entropy(rho, -1.0), DomainError);
}

TEST_CASE("renyi_entropy is non-increasing in gamma") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix rho = random_density_matrix(4, rng);
        double prev = renyi_entropy(rho, 0.5);
        for (double gamma : {1.0, 2.0, 3.0}) {
            const double cur = renyi_entropy(rho, gamma);
            CHECK(cur <= prev + 1e-10);
            prev = cur;
        }
    }
}

TEST_CASE("random generators: determinism and contracts") {
    Rng a(42), b(42);
    const Matrix ha = random_hermitian(4, a);
    const Matrix hb = random_hermitian(4, b);
    CHECK((ha - hb).cwiseAbs().maxCoeff() == 0.0);

    Rng rng(1);
    const Matrix u0 = random_unitary_exp(4, 0.0, rng);
    CHECK((u0 - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);

    for (int trial = 0; trial < 10; ++trial) {
        const Matrix u = random_unitary_exp(5, 0.1 + trial, rng);
        CHECK(unitarity_error(u) <= 1e-12);
    }

    const Matrix rho = random_density_matrix(3, rng);
    const EigResult e = eig_hermitian(rho);
    CHECK(e.values.minCoeff() >= -1e-12);
    CHECK(std::abs(rho.trace().real() - 1.0) <= 1e-12);

    const Vector psi = random_pure_state(7, rng);
    CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);
}

TEST_CASE("numerical_rank uses a relative threshold") {
    RealVector v(4);
    v << 10.0, 1.0, 1e-8, 1e-12;
    CHECK(numerical_rank(v) == 3);
    CHECK(numerical_rank(v, 1e-6) == 2);
}
