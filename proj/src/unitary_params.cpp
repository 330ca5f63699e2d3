#include "oqe/unitary_params.hpp"

#include <cmath>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

constexpr double kPivotTol = 1e-300;

struct Rotation {
    int p, q;
    double theta, phi;
};

// Left-multiply m by G(p, q, theta, phi): row update.
void apply_left(Matrix& m, const Rotation& g) {
    const double c = std::cos(g.theta), s = std::sin(g.theta);
    const cplx eip = std::exp(cplx(0.0, g.phi));
    const Eigen::RowVectorXcd rp = m.row(g.p), rq = m.row(g.q);
    m.row(g.p) = c * rp - s * std::conj(eip) * rq;
    m.row(g.q) = s * eip * rp + c * rq;
}

// Left-multiply m by G^dagger: row update with (-theta, phi).
void apply_left_adjoint(Matrix& m, const Rotation& g) {
    Rotation inv = g;
    inv.theta = -g.theta;
    apply_left(m, inv);
}

// Right-multiply m by G: column update.
void apply_right(Matrix& m, const Rotation& g) {
    const double c = std::cos(g.theta), s = std::sin(g.theta);
    const cplx eip = std::exp(cplx(0.0, g.phi));
    const Vector cp = m.col(g.p), cq = m.col(g.q);
    m.col(g.p) = c * cp + s * eip * cq;
    m.col(g.q) = -s * std::conj(eip) * cp + c * cq;
}

std::vector<Rotation> rotations_of(const UnitaryParams& p) {
    const int L = p.rotation_count();
    std::vector<Rotation> out(L);
    for (int l = 0; l < L; ++l) {
        const auto [a, b] = rotation_plane(p.dim, l);
        out[l] = {a, b, p.angles[l], p.phases[l]};
    }
    return out;
}

} // namespace

UnitaryParams UnitaryParams::zero(int dim) {
    UnitaryParams p;
    p.dim = dim;
    p.angles.assign(static_cast<std::size_t>(dim) * (dim - 1) / 2, 0.0);
    p.phases.assign(p.angles.size() + static_cast<std::size_t>(dim), 0.0);
    return p;
}

std::pair<int, int> rotation_plane(int dim, int l) {
    // Sweep: column c = 0 .. dim-2, row r = dim-1 down to c+1; the rotation
    // nulling entry (r, c) acts on the adjacent row pair (r-1, r).
    int idx = 0;
    for (int c = 0; c < dim - 1; ++c)
        for (int r = dim - 1; r > c; --r) {
            if (idx == l) return {r - 1, r};
            ++idx;
        }
    throw DomainError("rotation_plane: index out of range");
}

Matrix unitary_from_params(const UnitaryParams& p) {
    if (p.dim < 1) throw DomainError("unitary_from_params: dim must be >= 1");
    const int L = p.rotation_count();
    if (static_cast<int>(p.angles.size()) != L ||
        static_cast<int>(p.phases.size()) != L + p.dim)
        throw ShapeError("unitary_from_params: parameter count mismatch");

    Matrix m = Matrix::Zero(p.dim, p.dim);
    for (int i = 0; i < p.dim; ++i)
        m(i, i) = std::exp(cplx(0.0, p.phases[L + i]));
    const auto rots = rotations_of(p);
    for (int l = L - 1; l >= 0; --l) apply_left(m, rots[l]);
    return m;
}

UnitaryParams params_from_unitary(const Matrix& u) {
    if (u.rows() != u.cols() || u.rows() < 1)
        throw ShapeError("params_from_unitary: expected a square matrix");
    const int n = static_cast<int>(u.rows());
    UnitaryParams p = UnitaryParams::zero(n);

    Matrix v = u;
    int l = 0;
    for (int c = 0; c < n - 1; ++c)
        for (int r = n - 1; r > c; --r, ++l) {
            const cplx a = v(r - 1, c);
            const cplx b = v(r, c);
            double theta = 0.0, phi = 0.0;
            if (std::abs(b) > kPivotTol) {
                theta = std::atan2(std::abs(b), std::abs(a));
                phi = (std::abs(a) > kPivotTol) ? std::arg(b * std::conj(a))
                                                : std::arg(b);
            }
            p.angles[l] = theta;
            p.phases[l] = phi;
            apply_left_adjoint(v, {r - 1, r, theta, phi});
        }
    const int L = p.rotation_count();
    for (int i = 0; i < n; ++i) p.phases[L + i] = std::arg(v(i, i));
    return p;
}

std::vector<Matrix> unitary_jacobian(const UnitaryParams& p) {
    const int n = p.dim;
    const int L = p.rotation_count();
    const auto rots = rotations_of(p);

    // prefix[l] = G_0 ... G_{l-1}; suffix[l] = G_{l+1} ... G_{L-1} * D.
    std::vector<Matrix> prefix(L + 1), suffix(L + 1);
    prefix[0] = Matrix::Identity(n, n);
    for (int l = 0; l < L; ++l) {
        prefix[l + 1] = prefix[l];
        apply_right(prefix[l + 1], rots[l]);
    }
    Matrix d = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) d(i, i) = std::exp(cplx(0.0, p.phases[L + i]));
    suffix[L] = d;
    for (int l = L - 1; l >= 0; --l) {
        suffix[l] = suffix[l + 1];
        apply_left(suffix[l], rots[l]);
    }
    // suffix[l] currently includes G_l; the derivative needs the product
    // without it, so shift: d/dtheta_l U = prefix[l] dG_l suffix_excl[l],
    // where suffix_excl[l] = suffix[l + 1].

    std::vector<Matrix> jac(p.parameter_count());
    const Matrix u = prefix[L] * d;
    for (int l = 0; l < L; ++l) {
        const auto& g = rots[l];
        const double c = std::cos(g.theta), s = std::sin(g.theta);
        const cplx eip = std::exp(cplx(0.0, g.phi));

        Matrix dg_theta = Matrix::Zero(n, n);
        dg_theta(g.p, g.p) = -s;
        dg_theta(g.p, g.q) = -c * std::conj(eip);
        dg_theta(g.q, g.p) = c * eip;
        dg_theta(g.q, g.q) = -s;

        Matrix dg_phi = Matrix::Zero(n, n);
        dg_phi(g.p, g.q) = cplx(0.0, 1.0) * s * std::conj(eip);
        dg_phi(g.q, g.p) = cplx(0.0, 1.0) * s * eip;

        jac[l] = prefix[l] * dg_theta * suffix[l + 1];
        jac[L + l] = prefix[l] * dg_phi * suffix[l + 1];
    }
    for (int i = 0; i < n; ++i) {
        Matrix m = Matrix::Zero(n, n);
        m.col(i) = cplx(0.0, 1.0) * u.col(i);
        jac[2 * L + i] = m;
    }
    return jac;
}

std::vector<double> flatten(const UnitaryParams& p) {
    std::vector<double> out;
    out.reserve(p.parameter_count());
    out.insert(out.end(), p.angles.begin(), p.angles.end());
    out.insert(out.end(), p.phases.begin(), p.phases.end());
    return out;
}

UnitaryParams unflatten(int dim, const double* data) {
    UnitaryParams p = UnitaryParams::zero(dim);
    const int L = p.rotation_count();
    for (int l = 0; l < L; ++l) p.angles[l] = data[l];
    for (int i = 0; i < L + dim; ++i) p.phases[i] = data[L + i];
    return p;
}

} // namespace oqe
