#include "oqe/memory_metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

Matrix initial_env_state(const Ppt& ppt) {
    const int chi0 = ppt.bond_dim(0);
    Matrix rho(chi0, chi0);
    for (int a = 0; a < chi0; ++a)
        for (int ap = 0; ap < chi0; ++ap) {
            cplx acc = 0.0;
            for (int o = 0; o < ppt.d; ++o)
                acc += ppt.site0(o, a) * std::conj(ppt.site0(o, ap));
            rho(a, ap) = acc;
        }
    return rho;
}

// rho^E_0 = W W^dag with W(a, o) = site0(o, a).
Matrix initial_env_factor(const Ppt& ppt) {
    return ppt.site0.transpose();
}

// One recursion step on the factor: rho' = sum_q (B^q)^T rho (B^q)^*
// keeps the factored form with columns stacked over q, then recompressed.
Matrix advance_env_factor(const PptSite& site, const Matrix& w) {
    const int d2 = site.d * site.d;
    Matrix stacked(site.chi_right, w.cols() * d2);
    for (int q = 0; q < d2; ++q)
        stacked.block(0, q * w.cols(), site.chi_right, w.cols()) =
            site.mats[q].transpose() * w;
    const SvdResult f = svd(stacked);
    const int keep = std::max(1, numerical_rank(f.singular_values, 1e-14));
    return f.u.leftCols(keep) * f.singular_values.head(keep).asDiagonal();
}

RealVector schmidt_of_factor(const Matrix& w) {
    RealVector s = svd(w).singular_values;
    for (int i = 0; i < s.size(); ++i) s[i] = std::max(0.0, s[i]);
    return s;
}

RealVector probabilities_of_schmidt(const RealVector& s) {
    RealVector p(s.size());
    for (int i = 0; i < s.size(); ++i) p[i] = s[i] * s[i];
    return p;
}

} // namespace

TransferMatrix transfer_matrix(const PptSite& site) {
    if (site.chi_left != site.chi_right)
        throw ShapeError("transfer_matrix: site bonds must be square");
    Matrix acc = Matrix::Zero(site.chi_left, site.chi_left);
    for (const Matrix& m : site.mats) acc += m * m.adjoint();
    const double residual =
        (acc - Matrix::Identity(site.chi_left, site.chi_left)).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw ContractViolation("transfer_matrix: site is not right-canonical "
                                "(residual " +
                                std::to_string(residual) + ")");
    TransferMatrix t;
    t.D = site.chi_left;
    t.m = Matrix::Zero(static_cast<long>(t.D) * t.D, static_cast<long>(t.D) * t.D);
    for (const Matrix& b : site.mats) t.m += kron(b.conjugate(), b);
    return t;
}

Vector spectrum(const TransferMatrix& t) { return eigenvalues_general(t.m); }

Matrix transfer_left_apply(const PptSite& site, const Matrix& rho) {
    if (rho.rows() != site.chi_left || rho.cols() != site.chi_left)
        throw ShapeError("transfer_left_apply: state dimension mismatch");
    // The site matrices enter conjugated: with amplitudes stored ket-side,
    // this is the action whose iterates carry the physical environment state
    // (its spectrum is the squared Schmidt spectrum at the bond). Its matrix
    // representation is T^T, so it shares the spectrum of T.
    Matrix out = Matrix::Zero(site.chi_right, site.chi_right);
    for (const Matrix& b : site.mats) out += b.transpose() * rho * b.conjugate();
    return out;
}

EffectiveEnvState effective_env_state(const Ppt& ppt, int j) {
    if (j < 0 || j > ppt.k)
        throw ShapeError("effective_env_state: step out of range");
    Matrix rho = initial_env_state(ppt);
    for (int step = 1; step <= j; ++step)
        rho = transfer_left_apply(ppt.sites[static_cast<std::size_t>(step) - 1], rho);
    EffectiveEnvState out;
    out.D = static_cast<int>(rho.rows());
    out.rho = std::move(rho);
    return out;
}

RealVector bond_schmidt_values(const Ppt& ppt, int j) {
    if (j < 0 || j > ppt.k)
        throw ShapeError("bond_schmidt_values: step out of range");
    Matrix w = initial_env_factor(ppt);
    for (int step = 1; step <= j; ++step)
        w = advance_env_factor(ppt.sites[static_cast<std::size_t>(step) - 1], w);
    return schmidt_of_factor(w);
}

RealVector bond_probability_spectrum(const Ppt& ppt, int j) {
    return probabilities_of_schmidt(bond_schmidt_values(ppt, j));
}

int memory_size(const Ppt& ppt, int j) {
    return numerical_rank(bond_schmidt_values(ppt, j));
}

double memory_complexity(const Ppt& ppt, int j, double gamma) {
    return renyi_entropy_of_spectrum(bond_probability_spectrum(ppt, j), gamma);
}

Matrix dominant_fixed_point_power(const PptSite& site, double tol, int max_iter) {
    const int D = site.chi_left;
    // Generic full-rank start; the trace-preserving recursion then converges
    // to the dominant left fixed point whenever it is non-degenerate.
    Matrix rho = Matrix::Zero(D, D);
    for (int i = 0; i < D; ++i) rho(i, i) = 2.0 * (i + 1);
    rho /= rho.trace().real();
    for (int it = 0; it < max_iter; ++it) {
        const Matrix next = transfer_left_apply(site, rho);
        const double delta = (next - rho).cwiseAbs().maxCoeff();
        rho = next;
        if (delta < tol) break;
    }
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return rho;
}

Matrix dominant_fixed_point_dense(const TransferMatrix& t) {
    // The left action in column-major vectorization is T^T.
    Eigen::ComplexEigenSolver<Matrix> solver(t.m.transpose(), true);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("dominant_fixed_point_dense: eigensolver failed");
    int best = 0;
    for (int i = 1; i < solver.eigenvalues().size(); ++i)
        if (std::abs(solver.eigenvalues()[i]) > std::abs(solver.eigenvalues()[best]))
            best = i;
    const Vector v = solver.eigenvectors().col(best);
    Matrix rho(t.D, t.D);
    for (int c = 0; c < t.D; ++c)
        for (int r = 0; r < t.D; ++r) rho(r, c) = v[c * t.D + r];
    rho = 0.5 * (rho + rho.adjoint());
    const double tr = rho.trace().real();
    if (std::abs(tr) < 1e-12)
        throw NumericalFailure("dominant_fixed_point_dense: traceless dominant "
                               "eigenvector");
    rho /= tr;
    return rho;
}

Theorem1Report theorem1_check(const OqeModel& model, int horizon, double gamma) {
    if (!model.time_independent)
        throw ContractViolation("theorem1_check: model must be time-independent");
    validate(model);

    Theorem1Report rep;
    rep.mixed_init = !model.initial.is_pure;
    rep.horizon = horizon;
    rep.gamma = gamma;

    // Spectral checks run on the original-environment transfer matrix; the
    // enlarged one of a purified model is degenerate by construction.
    const PptSite site = site_from_unitary(model.unitaries[0], model.d, model.D);
    const TransferMatrix t = transfer_matrix(site);
    const Vector eigs = spectrum(t);
    rep.dominant_modulus = std::abs(eigs[0]);
    rep.subdominant_modulus = eigs.size() > 1 ? std::abs(eigs[1]) : 0.0;
    rep.spectral_radius = rep.dominant_modulus;
    rep.radius_ok = rep.spectral_radius <= 1.0 + 1e-10;
    rep.conclusive = rep.subdominant_modulus < 1.0 - 1e-8;

    const Matrix mixed_ref =
        Matrix::Identity(model.D, model.D) / static_cast<double>(model.D);
    rep.left_fixed_residual =
        (transfer_left_apply(site, mixed_ref) - mixed_ref).cwiseAbs().maxCoeff();
    Matrix right = Matrix::Zero(model.D, model.D);
    for (const Matrix& b : site.mats) right += b * mixed_ref * b.adjoint();
    rep.right_fixed_residual = (right - mixed_ref).cwiseAbs().maxCoeff();

    const OqeModel metric_model = rep.mixed_init ? purify(model) : model;
    const Ppt ppt = build_ppt(metric_model, horizon);

    if (rep.mixed_init) {
        rep.c0 = renyi_entropy(model.initial.mixed, gamma);
        rep.predicted_complexity = rep.c0 + std::log2(static_cast<double>(model.D));
        rep.predicted_size = model.d * model.D * model.D;
    } else {
        rep.predicted_complexity = std::log2(static_cast<double>(model.D));
        rep.predicted_size = model.D;
    }

    const RealVector schmidt = bond_schmidt_values(ppt, horizon);
    rep.observed_complexity =
        renyi_entropy_of_spectrum(probabilities_of_schmidt(schmidt), gamma);
    rep.observed_size = numerical_rank(schmidt);
    rep.complexity_gap = std::abs(rep.observed_complexity - rep.predicted_complexity);

    if (rep.mixed_init) {
        const EffectiveEnvState env = effective_env_state(ppt, horizon);
        const EigResult e0 = eig_hermitian(model.initial.mixed, 1e-8);
        Matrix expected = Matrix::Zero(env.D, env.D);
        const int D = model.D;
        for (int x = 0; x < e0.values.size(); ++x) {
            const double w = std::max(0.0, e0.values[x]) / static_cast<double>(D);
            for (int e = 0; e < D; ++e) expected(x * D + e, x * D + e) = w;
        }
        rep.mixed_limit_residual = (env.rho - expected).cwiseAbs().maxCoeff();
    }
    return rep;
}

std::vector<MetricSweepRow> metric_sweep(const OqeModel& model, int horizon,
                                         double gamma) {
    validate(model);
    const bool mixed = !model.initial.is_pure;
    const OqeModel metric_model = mixed ? purify(model) : model;
    const Ppt ppt = build_ppt(metric_model, horizon);

    double limit = std::log2(static_cast<double>(model.D));
    if (mixed) limit += renyi_entropy(model.initial.mixed, gamma);

    std::vector<MetricSweepRow> rows;
    rows.reserve(static_cast<std::size_t>(horizon) + 1);
    Matrix w = initial_env_factor(ppt);
    for (int j = 0; j <= horizon; ++j) {
        if (j > 0)
            w = advance_env_factor(ppt.sites[static_cast<std::size_t>(j) - 1], w);
        const RealVector schmidt = schmidt_of_factor(w);
        MetricSweepRow row;
        row.j = j;
        row.memory_size = numerical_rank(schmidt);
        row.complexity = renyi_entropy_of_spectrum(probabilities_of_schmidt(schmidt), gamma);
        row.gamma = gamma;
        row.predicted_limit = limit;
        row.seed = model.seed;
        rows.push_back(row);
    }
    return rows;
}

} // namespace oqe
