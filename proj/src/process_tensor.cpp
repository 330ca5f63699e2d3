#include "oqe/process_tensor.hpp"

#include <cmath>
#include <string>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

void require_pure(const OqeModel& model, const char* who) {
    if (!model.initial.is_pure)
        throw ContractViolation(std::string(who) +
                                ": model must have a pure initial state "
                                "(call purify first)");
}

long checked_phys_dim(int d, int k, long limit, const char* who) {
    long p = 1;
    for (int i = 0; i < 2 * k + 1; ++i) {
        p *= d;
        if (p > limit)
            throw ResourceError(std::string(who) + ": d^(2k+1) exceeds the dense cap " +
                                std::to_string(limit));
    }
    return p;
}

} // namespace

int PurifiedProcessTensor::bond_dim(int j) const {
    if (j < 0 || j > k) throw ShapeError("bond_dim: index out of range");
    if (j == 0) return static_cast<int>(site0.cols());
    return sites[static_cast<std::size_t>(j) - 1].chi_right;
}

long PurifiedProcessTensor::phys_dim() const { return dense_phys_dim(d, k); }

long dense_phys_dim(int d, int k) {
    long p = 1;
    for (int i = 0; i < 2 * k + 1; ++i) p *= d;
    return p;
}

PptSite site_from_unitary(const Matrix& u, int d, int D) {
    if (u.rows() != static_cast<long>(d) * D || u.cols() != u.rows())
        throw ShapeError("site_from_unitary: unitary must be dD x dD");
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    PptSite site;
    site.d = d;
    site.chi_left = D;
    site.chi_right = D;
    site.mats.assign(static_cast<std::size_t>(d) * d, Matrix(D, D));
    for (int o = 0; o < d; ++o)
        for (int i = 0; i < d; ++i) {
            Matrix& b = site.mat(i, o);
            for (int a = 0; a < D; ++a)
                for (int bnd = 0; bnd < D; ++bnd)
                    b(a, bnd) = inv_sqrt_d * u(o * D + bnd, i * D + a);
        }
    return site;
}

Ppt build_ppt(const OqeModel& model, int k) {
    require_pure(model, "build_ppt");
    if (!model.supports_steps(k))
        throw ShapeError("build_ppt: model does not supply " + std::to_string(k) +
                         " steps");
    const int d = model.d, D = model.D;

    Ppt ppt;
    ppt.d = d;
    ppt.k = k;
    ppt.site0.resize(d, D);
    for (int o = 0; o < d; ++o)
        for (int a = 0; a < D; ++a) ppt.site0(o, a) = model.initial.pure[o * D + a];

    for (int j = 1; j <= k; ++j)
        ppt.sites.push_back(site_from_unitary(model.unitary(j), d, D));
    return ppt;
}

Vector dense_state(const Ppt& ppt) {
    checked_phys_dim(ppt.d, ppt.k, kDenseLimit, "dense_state");
    const int d = ppt.d;
    // S holds the partial contraction as (bond, phys-so-far), o_0 fastest.
    Matrix s = ppt.site0.transpose(); // chi_0 x d
    long phys = d;
    for (const PptSite& site : ppt.sites) {
        Matrix next(site.chi_right, static_cast<long>(d) * d * phys);
        for (int q = 0; q < d * d; ++q)
            next.block(0, q * phys, site.chi_right, phys) =
                site.mats[q].transpose() * s;
        s = std::move(next);
        phys *= d * d;
    }
    Vector v(s.rows() * phys);
    for (long a = 0; a < s.rows(); ++a)
        for (long p = 0; p < phys; ++p) v[a * phys + p] = s(a, p);
    return v;
}

Matrix purification_matrix(const Ppt& ppt) {
    const Vector v = dense_state(ppt);
    const int env = ppt.bond_dim(ppt.k);
    const long phys = ppt.phys_dim();
    Matrix m(phys, env);
    for (int a = 0; a < env; ++a)
        for (long p = 0; p < phys; ++p) m(p, a) = v[a * phys + p];
    return m;
}

Vector build_circuit_state(const OqeModel& model, int k) {
    require_pure(model, "build_circuit_state");
    if (!model.supports_steps(k))
        throw ShapeError("build_circuit_state: model does not supply " +
                         std::to_string(k) + " steps");
    checked_phys_dim(model.d, k, kDenseLimit, "build_circuit_state");
    const int d = model.d, D = model.D;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    // Layout [env | o_0]; the environment register stays slowest throughout.
    long phys = d;
    Vector v(static_cast<long>(D) * d);
    for (int o = 0; o < d; ++o)
        for (int a = 0; a < D; ++a) v[static_cast<long>(a) * d + o] = model.initial.pure[o * D + a];

    Vector gate_in(static_cast<long>(d) * D), gate_out;
    for (int j = 1; j <= k; ++j) {
        const Matrix& u = model.unitary(j);
        // Attach the entangled pair on (o_j, i_{j-1}): layout becomes
        // [env | o_j | i_{j-1} | previous phys].
        Vector w = Vector::Zero(static_cast<long>(D) * d * d * phys);
        for (long a = 0; a < D; ++a)
            for (int m = 0; m < d; ++m)
                for (long p = 0; p < phys; ++p)
                    w[((a * d + m) * d + m) * phys + p] = inv_sqrt_d * v[a * phys + p];
        // Apply U to the (o_j, env) registers, system-major composite o*D+a.
        Vector out = Vector::Zero(w.size());
        for (int i = 0; i < d; ++i)
            for (long p = 0; p < phys; ++p) {
                for (int o = 0; o < d; ++o)
                    for (long a = 0; a < D; ++a)
                        gate_in[o * D + a] = w[((a * d + o) * d + i) * phys + p];
                gate_out = u * gate_in;
                for (int o = 0; o < d; ++o)
                    for (long a = 0; a < D; ++a)
                        out[((a * d + o) * d + i) * phys + p] = gate_out[o * D + a];
            }
        v = std::move(out);
        phys *= d * d;
    }
    return v;
}

ProcessTensorDense to_dense(const Ppt& ppt, long dense_limit) {
    checked_phys_dim(ppt.d, ppt.k, dense_limit, "to_dense");
    const Matrix m = purification_matrix(ppt);
    ProcessTensorDense out;
    out.d = ppt.d;
    out.k = ppt.k;
    out.m = m * m.adjoint();
    return out;
}

Matrix predict_state(const Ppt& ppt, const std::vector<QuantumOperation>& ops) {
    if (static_cast<int>(ops.size()) != ppt.k)
        throw ShapeError("predict_state: " + std::to_string(ops.size()) +
                         " operations supplied for k = " + std::to_string(ppt.k));
    const int d = ppt.d;
    const int chi0 = ppt.bond_dim(0);

    // E[(a, a'), (m, m')]: bond-pair density with open output legs.
    Matrix e(static_cast<long>(chi0) * chi0, static_cast<long>(d) * d);
    for (int a = 0; a < chi0; ++a)
        for (int ap = 0; ap < chi0; ++ap)
            for (int m = 0; m < d; ++m)
                for (int mp = 0; mp < d; ++mp)
                    e(a * chi0 + ap, m * d + mp) =
                        ppt.site0(m, a) * std::conj(ppt.site0(mp, ap));

    int chi = chi0;
    for (int j = 1; j <= ppt.k; ++j) {
        const PptSite& site = ppt.sites[static_cast<std::size_t>(j) - 1];
        const Matrix choi = ops[static_cast<std::size_t>(j) - 1].choi();
        // F[(a, a'), (i, i')] = sum_{m, m'} choi[(i, m), (i', m')] E[(a, a'), (m, m')]
        Matrix f = Matrix::Zero(static_cast<long>(chi) * chi, static_cast<long>(d) * d);
        for (int i = 0; i < d; ++i)
            for (int ip = 0; ip < d; ++ip)
                for (int m = 0; m < d; ++m)
                    for (int mp = 0; mp < d; ++mp) {
                        const cplx c = choi(i * d + m, ip * d + mp);
                        if (c == cplx(0.0, 0.0)) continue;
                        f.col(i * d + ip) += c * e.col(m * d + mp);
                    }
        // E'[(b, b'), (o, o')] = d * sum B[a, b] conj(B[a', b']) F[(a, a'), (i, i')]
        const int chi_r = site.chi_right;
        Matrix en = Matrix::Zero(static_cast<long>(chi_r) * chi_r,
                                 static_cast<long>(d) * d);
        for (int o = 0; o < d; ++o)
            for (int op = 0; op < d; ++op)
                for (int i = 0; i < d; ++i)
                    for (int ip = 0; ip < d; ++ip) {
                        const Matrix& b = site.mat(i, o);
                        const Matrix& bp = site.mat(ip, op);
                        // tmp[b, b'] = B^T F_block conj(B')
                        Matrix fblock(chi, chi);
                        for (int a = 0; a < chi; ++a)
                            for (int apx = 0; apx < chi; ++apx)
                                fblock(a, apx) = f(a * chi + apx, i * d + ip);
                        const Matrix tmp = b.transpose() * fblock * bp.conjugate();
                        for (int bb = 0; bb < chi_r; ++bb)
                            for (int bp2 = 0; bp2 < chi_r; ++bp2)
                                en(bb * chi_r + bp2, o * d + op) +=
                                    static_cast<double>(d) * tmp(bb, bp2);
                    }
        e = std::move(en);
        chi = chi_r;
    }

    Matrix rho = Matrix::Zero(d, d);
    for (int o = 0; o < d; ++o)
        for (int op = 0; op < d; ++op) {
            cplx acc = 0.0;
            for (int a = 0; a < chi; ++a) acc += e(a * chi + a, o * d + op);
            rho(o, op) = acc;
        }
    return rho;
}

ProcessTensorDense reduced_window(const OqeModel& model, int j, int m,
                                  long dense_limit) {
    if (j < 0 || m < 1) throw ShapeError("reduced_window: need j >= 0 and m >= 1");
    if (!model.supports_steps(j + m))
        throw ShapeError("reduced_window: horizon " + std::to_string(j + m) +
                         " exceeds the model's stored steps");

    OqeModel window;
    window.d = model.d;
    window.D = model.D;
    window.time_independent = model.time_independent;
    window.seed = model.seed;
    if (model.time_independent) {
        window.unitaries = model.unitaries;
    } else {
        for (int step = j + 1; step <= j + m; ++step)
            window.unitaries.push_back(model.unitary(step));
    }

    if (model.initial.is_pure) {
        Vector psi = model.initial.pure;
        for (int step = 1; step <= j; ++step) psi = model.unitary(step) * psi;
        window.initial = SeState::from_pure(std::move(psi));
    } else {
        Matrix sigma = model.initial.density();
        for (int step = 1; step <= j; ++step) {
            const Matrix& u = model.unitary(step);
            sigma = u * sigma * u.adjoint();
        }
        window.initial = SeState::from_mixed(std::move(sigma));
        window = purify(window);
    }
    return to_dense(build_ppt(window, m), dense_limit);
}

ProcessTensorDense reduced_window(const Ppt& ppt, int j, int m, long dense_limit) {
    if (j < 0 || m < 1) throw ShapeError("reduced_window: need j >= 0 and m >= 1");
    if (j + m > ppt.k)
        throw ShapeError("reduced_window: window " + std::to_string(j + m) +
                         " exceeds the tensor horizon " + std::to_string(ppt.k));
    const long win_phys = checked_phys_dim(ppt.d, m, dense_limit, "reduced_window");
    const int d = ppt.d;

    // Contract identity interventions into steps 0..j-1; the result is the
    // exact system-environment state at step j over (o, bond).
    const int chi_j = ppt.bond_dim(j);
    Matrix sigma(static_cast<long>(d) * chi_j, static_cast<long>(d) * chi_j);
    {
        // E[(a, a'), (o, o')] after j identity contractions.
        Matrix e(static_cast<long>(ppt.bond_dim(0)) * ppt.bond_dim(0),
                 static_cast<long>(d) * d);
        const int chi0 = ppt.bond_dim(0);
        for (int a = 0; a < chi0; ++a)
            for (int ap = 0; ap < chi0; ++ap)
                for (int mm = 0; mm < d; ++mm)
                    for (int mp = 0; mp < d; ++mp)
                        e(a * chi0 + ap, mm * d + mp) =
                            ppt.site0(mm, a) * std::conj(ppt.site0(mp, ap));
        int chi = chi0;
        for (int step = 1; step <= j; ++step) {
            const PptSite& site = ppt.sites[static_cast<std::size_t>(step) - 1];
            const int chi_r = site.chi_right;
            Matrix en = Matrix::Zero(static_cast<long>(chi_r) * chi_r,
                                     static_cast<long>(d) * d);
            for (int o = 0; o < d; ++o)
                for (int op = 0; op < d; ++op)
                    for (int i = 0; i < d; ++i)
                        for (int ip = 0; ip < d; ++ip) {
                            Matrix fblock(chi, chi);
                            for (int a = 0; a < chi; ++a)
                                for (int apx = 0; apx < chi; ++apx)
                                    fblock(a, apx) = e(a * chi + apx, i * d + ip);
                            const Matrix tmp = site.mat(i, o).transpose() * fblock *
                                               site.mat(ip, op).conjugate();
                            for (int bb = 0; bb < chi_r; ++bb)
                                for (int bp2 = 0; bp2 < chi_r; ++bp2)
                                    en(bb * chi_r + bp2, o * d + op) +=
                                        static_cast<double>(d) * tmp(bb, bp2);
                        }
            e = std::move(en);
            chi = chi_r;
        }
        for (int o = 0; o < d; ++o)
            for (int op = 0; op < d; ++op)
                for (int a = 0; a < chi_j; ++a)
                    for (int ap = 0; ap < chi_j; ++ap)
                        sigma(o * chi_j + a, op * chi_j + ap) =
                            e(a * chi_j + ap, o * d + op);
    }

    // Window tensor from the spectral decomposition of sigma: each
    // eigenvector seeds a mini-MPS over sites j+1..j+m.
    const EigResult es = eig_hermitian(sigma, 1e-8);
    ProcessTensorDense out;
    out.d = d;
    out.k = m;
    out.m = Matrix::Zero(win_phys, win_phys);
    for (int t = 0; t < es.values.size(); ++t) {
        const double w = es.values[t];
        if (w <= 1e-14) continue;
        Ppt mini;
        mini.d = d;
        mini.k = m;
        mini.site0.resize(d, chi_j);
        for (int o = 0; o < d; ++o)
            for (int a = 0; a < chi_j; ++a) mini.site0(o, a) = es.vectors(o * chi_j + a, t);
        mini.sites.assign(ppt.sites.begin() + j, ppt.sites.begin() + j + m);
        const Matrix pm = purification_matrix(mini);
        out.m += w * (pm * pm.adjoint());
    }
    return out;
}

double process_fidelity(const ProcessTensorDense& a, const ProcessTensorDense& b) {
    if (a.d != b.d || a.k != b.k || a.m.rows() != b.m.rows())
        throw ShapeError("process_fidelity: tensors have different shapes");
    return fidelity(a.m, b.m);
}

double ppt_process_fidelity(const Ppt& a, const Ppt& b) {
    if (a.d != b.d || a.k != b.k)
        throw ShapeError("ppt_process_fidelity: tensors have different shapes");
    return fidelity_from_purifications(purification_matrix(a), purification_matrix(b));
}

Ppt mps_from_dense(const Vector& state, int d, int k, int env_dim, double rel_tol) {
    const long phys = dense_phys_dim(d, k);
    if (state.size() != static_cast<long>(env_dim) * phys)
        throw ShapeError("mps_from_dense: state size does not match d, k, env_dim");

    Ppt ppt;
    ppt.d = d;
    ppt.k = k;
    ppt.sites.resize(k);

    // The environment basis is unobservable, so a rank-deficient environment
    // leg is compressed to its support (state = U S V^dag across the
    // (env | phys) cut leaves S V^dag, the same process tensor). Full-rank
    // states keep their basis, so the round trip stays exact.
    Vector v;
    int right_dim;
    {
        Matrix s(env_dim, phys);
        for (int a = 0; a < env_dim; ++a)
            for (long p = 0; p < phys; ++p) s(a, p) = state[static_cast<long>(a) * phys + p];
        const SvdResult f = svd(s);
        const int rank = std::max(1, numerical_rank(f.singular_values, rel_tol));
        if (rank == env_dim) {
            v = state;
            right_dim = env_dim;
        } else {
            v.resize(static_cast<long>(rank) * phys);
            for (int a = 0; a < rank; ++a)
                for (long p = 0; p < phys; ++p)
                    v[static_cast<long>(a) * phys + p] =
                        f.singular_values[a] * f.vh(a, p);
            right_dim = rank;
        }
    }
    // At stage j the layout is [bond | q_j | remaining phys], remaining phys
    // = d^{2j-1}.
    for (int j = k; j >= 1; --j) {
        const long rows = static_cast<long>(right_dim) * d * d;
        const long cols = v.size() / rows;
        Matrix a(rows, cols);
        for (long r = 0; r < rows; ++r)
            for (long c = 0; c < cols; ++c) a(r, c) = v[r * cols + c];
        const SvdResult f = svd(a);
        const int rank = numerical_rank(f.singular_values, rel_tol);
        if (rank == 0) throw NumericalFailure("mps_from_dense: zero state");

        PptSite& site = ppt.sites[static_cast<std::size_t>(j) - 1];
        site.d = d;
        site.chi_left = rank;
        site.chi_right = right_dim;
        site.mats.assign(static_cast<std::size_t>(d) * d, Matrix(rank, right_dim));
        for (int q = 0; q < d * d; ++q)
            for (int a_r = 0; a_r < right_dim; ++a_r)
                for (int m = 0; m < rank; ++m)
                    site.mats[q](m, a_r) = f.u(static_cast<long>(a_r) * d * d + q, m);

        Vector next(static_cast<long>(rank) * cols);
        for (int m = 0; m < rank; ++m)
            for (long c = 0; c < cols; ++c)
                next[m * cols + c] = f.singular_values[m] * f.vh(m, c);
        v = std::move(next);
        right_dim = rank;
    }

    ppt.site0.resize(d, right_dim);
    for (int a = 0; a < right_dim; ++a)
        for (int o = 0; o < d; ++o) ppt.site0(o, a) = v[static_cast<long>(a) * d + o];
    return ppt;
}

Ppt right_canonicalize(const Ppt& ppt, double rel_tol) {
    Ppt out = ppt;
    for (int j = out.k; j >= 1; --j) {
        PptSite& site = out.sites[static_cast<std::size_t>(j) - 1];
        const int d2 = out.d * out.d;
        Matrix m(site.chi_left, static_cast<long>(d2) * site.chi_right);
        for (int q = 0; q < d2; ++q)
            for (int b = 0; b < site.chi_right; ++b)
                for (int a = 0; a < site.chi_left; ++a)
                    m(a, static_cast<long>(q) * site.chi_right + b) = site.mats[q](a, b);
        const SvdResult f = svd(m);
        const int rank = numerical_rank(f.singular_values, rel_tol);
        Matrix carry = f.u.leftCols(rank) *
                       f.singular_values.head(rank).asDiagonal(); // chi_left x rank
        for (int q = 0; q < d2; ++q) {
            Matrix nb(rank, site.chi_right);
            for (int r = 0; r < rank; ++r)
                for (int b = 0; b < site.chi_right; ++b)
                    nb(r, b) = f.vh(r, static_cast<long>(q) * site.chi_right + b);
            site.mats[q] = std::move(nb);
        }
        site.chi_left = rank;
        if (j > 1) {
            PptSite& prev = out.sites[static_cast<std::size_t>(j) - 2];
            for (int q = 0; q < d2; ++q) prev.mats[q] = prev.mats[q] * carry;
            prev.chi_right = rank;
        } else {
            out.site0 = out.site0 * carry;
        }
    }
    return out;
}

void apply_env_gauge(Ppt& ppt, const Matrix& g) {
    const int env = ppt.bond_dim(ppt.k);
    if (g.rows() != env || g.cols() != env)
        throw ShapeError("apply_env_gauge: gauge must be chi_k x chi_k");
    if (ppt.k == 0) {
        ppt.site0 = ppt.site0 * g;
        return;
    }
    PptSite& last = ppt.sites.back();
    for (Matrix& m : last.mats) m = m * g;
}

double canonical_residual(const Ppt& ppt, int j) {
    if (j < 1 || j > ppt.k) throw ShapeError("canonical_residual: site index out of range");
    const PptSite& site = ppt.sites[static_cast<std::size_t>(j) - 1];
    Matrix acc = Matrix::Zero(site.chi_left, site.chi_left);
    for (const Matrix& m : site.mats) acc += m * m.adjoint();
    return (acc - Matrix::Identity(site.chi_left, site.chi_left)).cwiseAbs().maxCoeff();
}

cplx overlap(const Ppt& a, const Ppt& b) {
    if (a.d != b.d || a.k != b.k)
        throw ShapeError("overlap: tensors have different shapes");
    if (a.bond_dim(a.k) != b.bond_dim(b.k))
        throw ShapeError("overlap: environment dimensions differ");
    Matrix l = a.site0.adjoint() * b.site0; // chi_a x chi_b
    for (int j = 1; j <= a.k; ++j) {
        const PptSite& sa = a.sites[static_cast<std::size_t>(j) - 1];
        const PptSite& sb = b.sites[static_cast<std::size_t>(j) - 1];
        Matrix next = Matrix::Zero(sa.chi_right, sb.chi_right);
        for (int q = 0; q < a.d * a.d; ++q)
            next += sa.mats[q].adjoint() * l * sb.mats[q];
        l = std::move(next);
    }
    return l.trace();
}

} // namespace oqe
