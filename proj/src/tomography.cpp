#include "oqe/tomography.hpp"

#include <cmath>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

constexpr double kLeakageTol = 1e-6;

/// Register layout [env | site_k | ... | site_1 | site_0] with site 0
/// fastest; site 0 has dimension d, the others d^2.
struct SiteLayout {
    int d = 0;
    int k = 0;
    int env_dim = 0;

    long site_dim(int j) const { return j == 0 ? d : static_cast<long>(d) * d; }

    long site_stride(int j) const {
        long s = 1;
        for (int i = 0; i < j; ++i) s *= site_dim(i);
        return s;
    }

    long phys_dim() const { return site_stride(k) * site_dim(k); }
    long total_dim() const { return phys_dim() * env_dim; }

    long window_dim(int first, int last) const {
        long w = 1;
        for (int j = first; j <= last; ++j) w *= site_dim(j);
        return w;
    }

    /// Offsets of every sweep-order window index in the flat state, i.e. the
    /// layout position with all other registers at zero.
    std::vector<long> window_offsets(int first, int last) const {
        const long w = window_dim(first, last);
        std::vector<long> offsets(static_cast<std::size_t>(w));
        for (long idx = 0; idx < w; ++idx) {
            long rem = idx;
            long off = 0;
            // Sweep order: site `first` is the most significant digit.
            for (int j = last; j >= first; --j) {
                const long dim = site_dim(j);
                const long digit = rem % dim;
                rem /= dim;
                off += digit * site_stride(j);
            }
            offsets[static_cast<std::size_t>(idx)] = off;
        }
        return offsets;
    }
};

Matrix window_density_of_state(const Vector& state, const SiteLayout& lay, int first,
                               int last) {
    const long w = lay.window_dim(first, last);
    const long inner = lay.site_stride(first);           // registers faster than the window
    const long block = lay.site_stride(last) * lay.site_dim(last); // window + faster
    const long outer = lay.total_dim() / block;          // env + slower sites
    const auto offsets = lay.window_offsets(first, last);

    Matrix rho = Matrix::Zero(w, w);
    Vector amps(w);
    for (long a = 0; a < outer; ++a)
        for (long b = 0; b < inner; ++b) {
            const long base = a * block + b;
            for (long i = 0; i < w; ++i) amps[i] = state[base + offsets[i]];
            rho.noalias() += amps * amps.adjoint();
        }
    return rho;
}

void apply_window_gate_to_state(Vector& state, const SiteLayout& lay, int first,
                                int last, const Matrix& gate) {
    const long w = lay.window_dim(first, last);
    if (gate.rows() != w || gate.cols() != w)
        throw ShapeError("window gate dimension does not match the window");
    const long inner = lay.site_stride(first);
    const long block = lay.site_stride(last) * lay.site_dim(last);
    const long outer = lay.total_dim() / block;
    const auto offsets = lay.window_offsets(first, last);

    Vector in(w), out(w);
    for (long a = 0; a < outer; ++a)
        for (long b = 0; b < inner; ++b) {
            const long base = a * block + b;
            for (long i = 0; i < w; ++i) in[i] = state[base + offsets[i]];
            out.noalias() = gate * in;
            for (long i = 0; i < w; ++i) state[base + offsets[i]] = out[i];
        }
}

double prefix_zero_weight_of_state(const Vector& state, const SiteLayout& lay,
                                   int last) {
    const long zero_block = lay.site_stride(last) * lay.site_dim(last);
    const long outer = lay.total_dim() / zero_block;
    double acc = 0.0;
    for (long a = 0; a < outer; ++a) acc += std::norm(state[a * zero_block]);
    return acc;
}

} // namespace

TomographyPlan plan(int d, int k, int D_bound) {
    if (d < 2) throw DomainError("plan: system dimension must be >= 2");
    if (D_bound < 1) throw DomainError("plan: environment bound must be >= 1");
    TomographyPlan p;
    p.d = d;
    p.k = k;
    p.D_bound = D_bound;
    // Smallest t with (d^2)^t >= D_bound, computed in integers.
    int t = 0;
    long cap = 1;
    while (cap < D_bound) {
        cap *= static_cast<long>(d) * d;
        ++t;
    }
    p.kappa = t + 1;
    if (k < p.kappa)
        throw ContractViolation("plan: horizon k = " + std::to_string(k) +
                                " is shorter than the window size kappa = " +
                                std::to_string(p.kappa));
    p.f = k - p.kappa + 1;
    return p;
}

CostEstimate cost_estimate(const TomographyPlan& plan) {
    CostEstimate c;
    c.tomography_runs = plan.k - plan.kappa + 2;
    c.window_dim = 1;
    for (int i = 0; i < 2 * plan.kappa; ++i) c.window_dim *= plan.d;
    c.real_parameters = c.tomography_runs * c.window_dim * c.window_dim;
    return c;
}

Disentangler build_disentangler(const Matrix& rho_window, const TomographyPlan& plan,
                                int j) {
    const long w = rho_window.rows();
    if (rho_window.cols() != w)
        throw ShapeError("build_disentangler: window density must be square");
    if (std::abs(rho_window.trace().real() - 1.0) > 1e-8)
        throw ContractViolation("build_disentangler: window density must have "
                                "unit trace");

    long expected = j == 0 ? plan.d : static_cast<long>(plan.d) * plan.d;
    for (int i = 1; i < plan.kappa; ++i) expected *= static_cast<long>(plan.d) * plan.d;
    if (w != expected)
        throw ShapeError("build_disentangler: window density has dimension " +
                         std::to_string(w) + ", expected " + std::to_string(expected));

    const EigResult e = eig_hermitian(rho_window, 1e-8);
    const int support = numerical_rank(e.values.cwiseMax(0.0));

    Matrix gate = Matrix::Zero(w, w);
    for (int l = 0; l < support; ++l) gate.row(l) = e.vectors.col(l).adjoint();

    // Deterministic kernel completion: orthogonalize canonical basis vectors
    // in index order against everything accepted so far. Projecting twice
    // keeps the result orthogonal even when the first residual is tiny.
    int filled = support;
    for (long c = 0; c < w && filled < w; ++c) {
        Vector v = Vector::Zero(w);
        v[c] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (int m = 0; m < filled; ++m) {
                const cplx overlap_m = (gate.row(m) * v)(0, 0); // row m is <w_m|
                v -= overlap_m * gate.row(m).adjoint();
            }
        const double n = v.norm();
        if (n > 1e-8) {
            gate.row(filled) = (v / n).adjoint();
            ++filled;
        }
    }
    if (filled != w)
        throw NumericalFailure("build_disentangler: kernel completion failed");

    Disentangler out;
    out.window_start = j;
    out.gate = std::move(gate);
    if (unitarity_error(out.gate) > 1e-12)
        throw NumericalFailure("build_disentangler: gate is not unitary");
    return out;
}

SimulatorOracle::SimulatorOracle(const OqeModel& model, int k, double epsilon)
    : d_(model.d), k_(k), env_dim_(model.D), epsilon_(epsilon) {
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw DomainError("SimulatorOracle: epsilon must be in [0, 1)");
    validate(model);
    state_ = build_circuit_state(model, k);
}

Matrix SimulatorOracle::window_density(int first, int last) {
    if (first < 0 || last > k_ || first > last)
        throw ShapeError("window_density: window out of range");
    const SiteLayout lay{d_, k_, env_dim_};
    Matrix rho = window_density_of_state(state_, lay, first, last);
    if (epsilon_ > 0.0) {
        const long w = rho.rows();
        rho = (1.0 - epsilon_) * rho +
              epsilon_ / static_cast<double>(w) * Matrix::Identity(w, w);
    }
    rho = 0.5 * (rho + rho.adjoint());
    rho /= rho.trace().real();
    return rho;
}

void SimulatorOracle::apply_window_gate(int first, int last, const Matrix& gate) {
    const SiteLayout lay{d_, k_, env_dim_};
    apply_window_gate_to_state(state_, lay, first, last, gate);
}

double SimulatorOracle::prefix_zero_weight(int last) const {
    const SiteLayout lay{d_, k_, env_dim_};
    return prefix_zero_weight_of_state(state_, lay, last);
}

TomographyResult run_tomography(MeasurementOracle& oracle, const TomographyPlan& plan) {
    if (oracle.d() != plan.d || oracle.steps() != plan.k)
        throw ShapeError("run_tomography: oracle and plan disagree on shape");
    const int d = plan.d, k = plan.k, kappa = plan.kappa, f = plan.f;

    TomographyTranscript transcript;
    transcript.d = d;
    transcript.k = k;
    transcript.D_bound = plan.D_bound;
    transcript.kappa = kappa;
    transcript.f = f;

    std::vector<Disentangler> gates;
    gates.reserve(static_cast<std::size_t>(f) + 1);
    for (int j = 0; j <= f; ++j) {
        const int last = j + kappa - 1;
        const Matrix rho = oracle.window_density(j, last);
        Disentangler dis = build_disentangler(rho, plan, j);
        oracle.apply_window_gate(j, last, dis.gate);

        WindowRecord rec;
        rec.window_start = j;
        rec.spectrum = eig_hermitian(rho, 1e-8).values;
        rec.leakage = std::max(0.0, 1.0 - oracle.prefix_zero_weight(j));
        transcript.windows.push_back(rec);
        gates.push_back(std::move(dis));
    }

    transcript.final_leakage = std::max(0.0, 1.0 - oracle.prefix_zero_weight(f));
    if (transcript.final_leakage > kLeakageTol)
        throw DBoundTooSmall(
            "run_tomography: " + std::to_string(transcript.final_leakage) +
                " of the weight failed to disentangle; the assumed environment "
                "bound " +
                std::to_string(plan.D_bound) + " is too small",
            transcript.final_leakage);

    // Tail readout: eigenpairs of the last kappa-1 sites; the unobservable
    // environment basis is fixed to computational states |s>.
    const long tail_dim = dense_phys_dim(d, kappa - 1) / d; // d^{2(kappa-1)}
    int retained = 1;
    RealVector tail_vals = RealVector::Ones(1);
    Matrix tail_vecs = Matrix::Ones(1, 1);
    if (kappa > 1) {
        const Matrix rho_tail = oracle.window_density(f + 1, k);
        const EigResult et = eig_hermitian(rho_tail, 1e-8);
        transcript.final_spectrum = et.values;
        const int rank = numerical_rank(et.values.cwiseMax(0.0), 1e-12);
        retained = std::min(rank, plan.D_bound);
        tail_vals = et.values.head(retained);
        tail_vecs = et.vectors.leftCols(retained);
    } else {
        transcript.final_spectrum = RealVector::Ones(1);
    }
    transcript.retained_env = retained;

    double weight = 0.0;
    for (int s = 0; s < retained; ++s) weight += std::max(0.0, tail_vals[s]);

    // Assemble |0...0> (x) sum_s lambda_s |a_s> |s>_E on a classical register.
    const SiteLayout lay{d, k, retained};
    Vector state = Vector::Zero(lay.total_dim());
    if (kappa > 1) {
        const auto offsets = lay.window_offsets(f + 1, k);
        if (static_cast<long>(offsets.size()) != tail_dim)
            throw NumericalFailure("run_tomography: tail dimension mismatch");
        for (int s = 0; s < retained; ++s) {
            const double lam = std::sqrt(std::max(0.0, tail_vals[s]) / weight);
            const long env_off = static_cast<long>(s) * lay.phys_dim();
            for (long i = 0; i < tail_dim; ++i)
                state[env_off + offsets[i]] = lam * tail_vecs(i, s);
        }
    } else {
        state[0] = 1.0;
    }

    // Undo the disentangling circuit classically.
    for (int j = f; j >= 0; --j)
        apply_window_gate_to_state(state, lay, j, j + kappa - 1,
                                   gates[static_cast<std::size_t>(j)].gate.adjoint());

    TomographyResult result;
    result.ppt = mps_from_dense(state, d, k, retained);
    result.transcript = std::move(transcript);
    return result;
}

} // namespace oqe
