#include "oqe/oqe_model.hpp"

#include <cmath>
#include <sstream>

#include "oqe/errors.hpp"

namespace oqe {

SeState SeState::from_pure(Vector psi) {
    SeState s;
    s.pure = std::move(psi);
    s.is_pure = true;
    return s;
}

SeState SeState::from_mixed(Matrix rho) {
    SeState s;
    s.mixed = std::move(rho);
    s.is_pure = false;
    return s;
}

Matrix SeState::density() const {
    if (is_pure) return pure * pure.adjoint();
    return mixed;
}

const Matrix& OqeModel::unitary(int j) const {
    if (j < 1) throw ShapeError("OqeModel::unitary: step index must be >= 1");
    if (time_independent) return unitaries.at(0);
    if (j > stored_steps())
        throw ShapeError("OqeModel::unitary: step " + std::to_string(j) +
                         " beyond stored horizon " + std::to_string(stored_steps()));
    return unitaries[static_cast<std::size_t>(j) - 1];
}

std::vector<std::string> validation_errors(const OqeModel& model) {
    std::vector<std::string> errs;
    if (model.d < 1) errs.push_back("system dimension d must be >= 1");
    if (model.D < 1) errs.push_back("environment dimension D must be >= 1");
    if (model.d < 1 || model.D < 1) return errs;

    const long dim = static_cast<long>(model.d) * model.D;
    if (model.initial.dim() != dim) {
        std::ostringstream os;
        os << "initial state has dimension " << model.initial.dim()
           << ", expected d*D = " << dim;
        errs.push_back(os.str());
    } else if (model.initial.is_pure) {
        const double n = model.initial.pure.norm();
        if (std::abs(n - 1.0) > 1e-12)
            errs.push_back("initial pure state norm is " + std::to_string(n) +
                           ", expected 1 within 1e-12");
    } else {
        const Matrix& rho = model.initial.mixed;
        if (hermiticity_error(rho) > 1e-10)
            errs.push_back("initial density matrix is not Hermitian");
        else {
            if (std::abs(rho.trace().real() - 1.0) > 1e-10)
                errs.push_back("initial density matrix trace is not 1");
            const EigResult e = eig_hermitian(rho, 1e-8);
            if (e.values.minCoeff() < -1e-10)
                errs.push_back("initial density matrix has negative eigenvalue " +
                               std::to_string(e.values.minCoeff()));
        }
    }

    if (model.unitaries.empty()) errs.push_back("model stores no unitaries");
    if (model.time_independent && model.unitaries.size() != 1)
        errs.push_back("time-independent model must store exactly one unitary");
    for (std::size_t j = 0; j < model.unitaries.size(); ++j) {
        const Matrix& u = model.unitaries[j];
        std::ostringstream os;
        if (u.rows() != dim || u.cols() != dim) {
            os << "unitary at step " << j + 1 << " is " << u.rows() << "x" << u.cols()
               << ", expected " << dim << "x" << dim;
            errs.push_back(os.str());
            continue;
        }
        const double ue = unitarity_error(u);
        if (ue > 1e-12) {
            os << "matrix at step " << j + 1 << " is not unitary: |U^dag U - I| = " << ue;
            errs.push_back(os.str());
        }
    }
    return errs;
}

void validate(const OqeModel& model) {
    const auto errs = validation_errors(model);
    if (errs.empty()) return;
    std::string msg = "invalid model:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ContractViolation(msg);
}

Matrix simulate_process(const OqeModel& model, const std::vector<QuantumOperation>& ops,
                        int k) {
    if (static_cast<int>(ops.size()) != k)
        throw ShapeError("simulate_process: " + std::to_string(ops.size()) +
                         " operations supplied for k = " + std::to_string(k));
    if (!model.supports_steps(k))
        throw ShapeError("simulate_process: model stores " +
                         std::to_string(model.stored_steps()) +
                         " steps, requested " + std::to_string(k));

    const Matrix id_env = Matrix::Identity(model.D, model.D);
    Matrix sigma = model.initial.density();
    for (int j = 0; j < k; ++j) {
        if (ops[j].dim() != model.d)
            throw ShapeError("simulate_process: operation " + std::to_string(j) +
                             " has wrong system dimension");
        Matrix after = Matrix::Zero(sigma.rows(), sigma.cols());
        for (const Matrix& kr : ops[j].kraus()) {
            const Matrix ke = kron(kr, id_env);
            after += ke * sigma * ke.adjoint();
        }
        const Matrix& u = model.unitary(j + 1);
        sigma = u * after * u.adjoint();
    }
    return partial_trace(sigma, {model.d, model.D}, {0});
}

OqeModel purify(const OqeModel& model) {
    if (model.initial.is_pure) return model;
    validate(model);

    const int d = model.d, D = model.D;
    const int X = d * D;      // external purification factor
    const int Dp = X * D;     // enlarged environment, index e' = x * D + e
    const EigResult e = eig_hermitian(model.initial.mixed, 1e-8);

    Vector psi = Vector::Zero(static_cast<long>(d) * Dp);
    for (int x = 0; x < X; ++x) {
        const double lam = std::max(0.0, e.values[x]);
        if (lam == 0.0) continue;
        const double w = std::sqrt(lam);
        for (int s = 0; s < d; ++s)
            for (int en = 0; en < D; ++en)
                psi[static_cast<long>(s) * Dp + x * D + en] =
                    w * e.vectors(s * D + en, x);
    }
    psi /= psi.norm();

    OqeModel out;
    out.d = d;
    out.D = Dp;
    out.initial = SeState::from_pure(std::move(psi));
    out.time_independent = model.time_independent;
    out.seed = model.seed;
    for (const Matrix& u : model.unitaries) {
        Matrix up = Matrix::Zero(static_cast<long>(d) * Dp, static_cast<long>(d) * Dp);
        for (int sp = 0; sp < d; ++sp)
            for (int ep = 0; ep < D; ++ep)
                for (int s = 0; s < d; ++s)
                    for (int en = 0; en < D; ++en) {
                        const cplx v = u(sp * D + ep, s * D + en);
                        if (v == cplx(0.0, 0.0)) continue;
                        for (int x = 0; x < X; ++x)
                            up(static_cast<long>(sp) * Dp + x * D + ep,
                               static_cast<long>(s) * Dp + x * D + en) = v;
                    }
        out.unitaries.push_back(std::move(up));
    }
    return out;
}

std::vector<QuantumOperation> informationally_complete_ops(int d) {
    if (d < 2) throw DomainError("informationally_complete_ops: d must be >= 2");
    // d^2 informationally complete pure states: the computational basis plus
    // real and imaginary two-level superpositions.
    std::vector<Vector> states;
    for (int j = 0; j < d; ++j) {
        Vector v = Vector::Zero(d);
        v[j] = 1.0;
        states.push_back(v);
    }
    const double r = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            Vector v = Vector::Zero(d);
            v[j] = r;
            v[k] = r;
            states.push_back(v);
            Vector w = Vector::Zero(d);
            w[j] = r;
            w[k] = cplx(0.0, r);
            states.push_back(w);
        }

    // Single-Kraus prepare-and-measure pairs |a><b|; the (0, 0) slot is
    // replaced by the identity channel, which keeps the span complete.
    std::vector<QuantumOperation> ops;
    ops.reserve(states.size() * states.size());
    for (std::size_t a = 0; a < states.size(); ++a)
        for (std::size_t b = 0; b < states.size(); ++b) {
            if (a == 0 && b == 0) {
                ops.push_back(QuantumOperation::identity(d));
                continue;
            }
            const Matrix k = states[a] * states[b].adjoint();
            ops.push_back(QuantumOperation(d, {k}));
        }
    return ops;
}

OqeModel random_model(const ModelSpec& spec, Rng& rng) {
    if (spec.d < 1 || spec.D < 1)
        throw DomainError("random_model: dimensions must be >= 1");
    OqeModel m;
    m.d = spec.d;
    m.D = spec.D;
    m.time_independent = spec.time_independent;
    m.seed = rng.seed_used();

    const int dim = spec.d * spec.D;
    if (spec.mixed_initial) {
        m.initial = SeState::from_mixed(random_density_matrix(dim, rng));
    } else {
        const Vector s = random_pure_state(spec.d, rng);
        const Vector e = random_pure_state(spec.D, rng);
        Vector psi(dim);
        for (int i = 0; i < spec.d; ++i)
            for (int j = 0; j < spec.D; ++j) psi[i * spec.D + j] = s[i] * e[j];
        m.initial = SeState::from_pure(std::move(psi));
    }

    const int count = spec.time_independent ? 1 : spec.k;
    for (int j = 0; j < count; ++j)
        m.unitaries.push_back(random_unitary_exp(dim, spec.eta, rng));
    return m;
}

} // namespace oqe
