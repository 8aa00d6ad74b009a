#include "qndtomo/lindblad.hpp"

#include "qndtomo/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace qndtomo {

namespace {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

Eigen::Index qubit_dim(int num_qubits) { return Eigen::Index{1} << num_qubits; }

/// Operator on qubit j (0-based) embedded as I_cavity (x) ... (x) op (x) ...
ComplexMatrix embed_qubit_op(const ComplexMatrix& op, int qubit, int num_qubits, int n_max) {
    ComplexMatrix q = qubit == 0 ? op : identity(2);
    for (int j = 1; j < num_qubits; ++j) q = kron(q, j == qubit ? op : identity(2));
    return kron(identity(n_max + 1), q);
}

ComplexMatrix embed_cavity_op(const ComplexMatrix& op, int num_qubits) {
    return kron(op, identity(qubit_dim(num_qubits)));
}

/// Max absolute row sum, an induced norm bounding the spectral radius.
double induced_norm(const ComplexMatrix& m) { return m.cwiseAbs().rowwise().sum().maxCoeff(); }

/// Integrator view of a model: sparse generator pieces in the interaction
/// frame of the qubit self-energy when that frame is exact, else in the
/// drive frame.
struct Propagator {
    SparseMatrix k;      // H_rest - (i/2) sum rate A^dagger A
    SparseMatrix k_adj;  // its adjoint
    std::vector<double> rates;
    std::vector<SparseMatrix> jumps;
    std::vector<SparseMatrix> jumps_adj;
    Eigen::VectorXd frame;  // empty when no frame is used
    double norm_bound = 0.0;

    ComplexMatrix rhs(const ComplexMatrix& rho) const {
        ComplexMatrix out = -kI * (k * rho);
        out.noalias() += kI * (rho * k_adj);
        for (std::size_t c = 0; c < jumps.size(); ++c) {
            const ComplexMatrix left = jumps[c] * rho;
            out.noalias() += rates[c] * (left * jumps_adj[c]);
        }
        return out;
    }
};

bool frame_is_exact(const LindbladModel& model, const ComplexMatrix& h_rest) {
    const Eigen::VectorXd& s = model.qubit_self_energy;
    const double scale = 1e-12 * (s.cwiseAbs().maxCoeff() + 1.0);
    for (Eigen::Index i = 0; i < h_rest.rows(); ++i)
        for (Eigen::Index j = 0; j < h_rest.cols(); ++j)
            if (h_rest(i, j) != Complex(0.0) && std::abs(s(i) - s(j)) > scale) return false;
    for (const auto& c : model.collapse_operators) {
        std::optional<double> offset;
        for (Eigen::Index i = 0; i < c.op.rows(); ++i)
            for (Eigen::Index j = 0; j < c.op.cols(); ++j) {
                if (c.op(i, j) == Complex(0.0)) continue;
                const double d = s(i) - s(j);
                if (!offset) offset = d;
                else if (std::abs(*offset - d) > scale) return false;
            }
    }
    return true;
}

Propagator make_propagator(const LindbladModel& model) {
    Propagator p;
    ComplexMatrix h = model.hamiltonian;
    if (model.qubit_self_energy.size() == model.dim()) {
        ComplexMatrix h_rest = h;
        h_rest.diagonal() -= model.qubit_self_energy.cast<Complex>();
        if (frame_is_exact(model, h_rest)) {
            h = std::move(h_rest);
            p.frame = model.qubit_self_energy;
        }
    }

    ComplexMatrix k = h;
    double bound = 2.0 * induced_norm(h);
    for (const auto& c : model.collapse_operators) {
        const ComplexMatrix ada = c.op.adjoint() * c.op;
        k -= 0.5 * kI * c.rate * ada;
        bound += c.rate * (induced_norm(c.op) * induced_norm(c.op.adjoint()) + induced_norm(ada));
        p.rates.push_back(c.rate);
        p.jumps.push_back(c.op.sparseView());
        p.jumps_adj.push_back(ComplexMatrix(c.op.adjoint()).sparseView());
    }
    p.k = k.sparseView();
    p.k_adj = ComplexMatrix(k.adjoint()).sparseView();
    p.norm_bound = bound;
    return p;
}

double choose_dt(const LindbladModel& model, const Propagator& p, double requested) {
    if (requested > 0.0) return requested;
    double dt = 0.02 / model.kappa;
    if (p.norm_bound > 0.0) dt = std::min(dt, 1.5 / p.norm_bound);
    return dt;
}

void rk4_step(const Propagator& p, ComplexMatrix& rho, double dt, double& max_herm_drift) {
    const ComplexMatrix k1 = p.rhs(rho);
    const ComplexMatrix k2 = p.rhs(rho + 0.5 * dt * k1);
    const ComplexMatrix k3 = p.rhs(rho + 0.5 * dt * k2);
    const ComplexMatrix k4 = p.rhs(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    max_herm_drift = std::max(max_herm_drift, hermiticity_error(rho));
    rho = 0.5 * (rho + rho.adjoint()).eval();
}

double windowed_change(const ComplexMatrix& now, const ComplexMatrix& before, ConvergenceScope scope,
                       Eigen::Index qdim) {
    if (scope == ConvergenceScope::full_state) return max_abs(now - before);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < now.rows(); ++i)
        for (Eigen::Index j = 0; j < now.cols(); ++j)
            if (i % qdim == j % qdim) worst = std::max(worst, std::abs(now(i, j) - before(i, j)));
    return worst;
}

/// Rotates an interaction-frame state back: rho_ij * exp(-i (s_i - s_j) t).
ComplexMatrix leave_frame(const ComplexMatrix& rho_i, const Eigen::VectorXd& frame, double t) {
    if (frame.size() == 0) return rho_i;
    ComplexMatrix out = rho_i;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (frame(i) != frame(j)) out(i, j) *= std::polar(1.0, -(frame(i) - frame(j)) * t);
    return out;
}

double top_level(const ComplexMatrix& rho, const FockSpaceConfig& fock, int num_qubits) {
    const Eigen::Index qdim = qubit_dim(num_qubits);
    double p = 0.0;
    for (Eigen::Index q = 0; q < qdim; ++q) p += rho(fock.n_max * qdim + q, fock.n_max * qdim + q).real();
    return p;
}

void check_initial_state(const LindbladModel& model, const ComplexMatrix& rho0) {
    if (rho0.rows() != model.dim() || rho0.cols() != model.dim())
        throw ConfigError("initial state dimension does not match the model");
    if (hermiticity_error(rho0) > kHermitianTol) throw ConfigError("initial state is not Hermitian");
    if (std::abs(rho0.trace() - 1.0) > kHermitianTol) throw ConfigError("initial state trace differs from 1");
}

void finish(EvolutionResult& out, const LindbladModel& model, const Propagator& p,
            const ComplexMatrix& rho_frame) {
    out.rho = leave_frame(rho_frame, p.frame, out.time);
    out.trace_drift = std::abs(out.rho.trace() - 1.0);
    out.top_level_population = top_level(out.rho, model.fock, model.num_qubits);
    out.truncated = out.top_level_population >= model.fock.top_level_tolerance;
    out.used_interaction_frame = p.frame.size() != 0;
}

}  // namespace

void FockSpaceConfig::validate() const {
    if (n_max < 1) throw ConfigError("n_max must be >= 1");
    if (!(top_level_tolerance > 0.0)) throw ConfigError("top_level_tolerance must be positive");
}

FockSpaceConfig auto_fock_space(const CavityDriveParams& cav, double top_level_tolerance) {
    cav.validate();
    const double nbar = empty_cavity_peak(cav);
    const double target = 1e-3 * top_level_tolerance;
    // Poisson tail P(N >= n) for mean nbar, accumulated term by term.
    double term = std::exp(-nbar);
    double cdf = term;
    int n = 0;
    while (1.0 - cdf > target && n < 400) {
        ++n;
        term *= nbar / n;
        cdf += term;
    }
    FockSpaceConfig fock;
    fock.n_max = std::max(3, n + 2);
    fock.top_level_tolerance = top_level_tolerance;
    return fock;
}

void LindbladModel::validate() const {
    fock.validate();
    if (num_qubits < 0 || num_qubits > 2) throw ConfigError("LindbladModel: 0, 1 or 2 qubits");
    const Eigen::Index expected = (fock.n_max + 1) * qubit_dim(num_qubits);
    if (hamiltonian.rows() != expected || hamiltonian.cols() != expected)
        throw ConfigError("LindbladModel: Hamiltonian dimension does not match Fock space and qubits");
    if (hermiticity_error(hamiltonian) > kHermitianTol * (max_abs(hamiltonian) + 1.0))
        throw ConfigError("LindbladModel: Hamiltonian is not Hermitian");
    if (qubit_self_energy.size() != 0 && qubit_self_energy.size() != expected)
        throw ConfigError("LindbladModel: self-energy diagonal has wrong length");
    for (const auto& c : collapse_operators) {
        if (c.rate < 0.0) throw ConfigError("LindbladModel: negative rate for " + c.name);
        if (c.op.rows() != expected || c.op.cols() != expected)
            throw ConfigError("LindbladModel: collapse operator " + c.name + " has wrong dimension");
    }
    if (!(kappa > 0.0)) throw ConfigError("LindbladModel: kappa must be positive");
}

LindbladModel build_dispersive_model(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                                     const FockSpaceConfig& fock) {
    cav.validate();
    fock.validate();
    if (qubits.size() > 2) throw ConfigError("build_dispersive_model: at most two qubits");
    const int n = static_cast<int>(qubits.size());
    for (const auto& q : qubits) q.validate(cav.omega_r);

    const ComplexMatrix a = embed_cavity_op(annihilation(fock.n_max), n);
    const ComplexMatrix adag = a.adjoint();
    const ComplexMatrix number = adag * a;

    LindbladModel model;
    model.num_qubits = n;
    model.fock = fock;
    model.kappa = cav.kappa;

    ComplexMatrix pull = -cav.detuning() * identity(a.rows());
    ComplexMatrix self_energy = ComplexMatrix::Zero(a.rows(), a.cols());
    for (int j = 0; j < n; ++j) {
        const QubitParams& q = qubits[static_cast<std::size_t>(j)];
        const double shift = q.dispersive_shift(cav.omega_r);
        const ComplexMatrix sz = embed_qubit_op(pauli(Pauli::Z), j, n, fock.n_max);
        pull += shift * sz;
        self_energy += 0.5 * (q.omega_q + shift) * sz;
    }
    model.hamiltonian = pull * number + self_energy + cav.epsilon * (adag + a);
    model.qubit_self_energy = self_energy.diagonal().real();

    model.collapse_operators.push_back({cav.kappa, a, "cavity"});
    for (int j = 0; j < n; ++j) {
        const QubitParams& q = qubits[static_cast<std::size_t>(j)];
        const std::string tag = std::to_string(j + 1);
        if (q.gamma1 > 0.0)
            model.collapse_operators.push_back(
                {q.gamma1, embed_qubit_op(sigma_minus(), j, n, fock.n_max), "relaxation" + tag});
        if (q.gamma_phi > 0.0)
            model.collapse_operators.push_back(
                {0.5 * q.gamma_phi, embed_qubit_op(pauli(Pauli::Z), j, n, fock.n_max), "dephasing" + tag});
    }
    return model;
}

ComplexMatrix lindblad_rhs(const LindbladModel& model, const ComplexMatrix& rho) {
    ComplexMatrix out = -kI * commutator(model.hamiltonian, rho);
    for (const auto& c : model.collapse_operators) {
        const ComplexMatrix ada = c.op.adjoint() * c.op;
        out += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (ada * rho + rho * ada));
    }
    return out;
}

EvolutionResult evolve_to_steady(const LindbladModel& model, const ComplexMatrix& rho0,
                                 const EvolveOptions& options) {
    model.validate();
    check_initial_state(model, rho0);
    if (!(options.tol > 0.0)) throw ConfigError("evolve_to_steady: tol must be positive");

    const Propagator p = make_propagator(model);
    EvolutionResult out;
    out.dt = choose_dt(model, p, options.dt);
    const double window = options.window > 0.0 ? options.window : 10.0 / model.kappa;
    const auto steps_per_window =
        static_cast<std::size_t>(std::max(1.0, std::ceil(window / out.dt)));
    const Eigen::Index qdim = qubit_dim(model.num_qubits);

    ComplexMatrix rho = rho0;
    ComplexMatrix snapshot = rho;
    out.residual = std::numeric_limits<double>::infinity();
    while (out.steps + steps_per_window <= options.max_steps) {
        for (std::size_t s = 0; s < steps_per_window; ++s) rk4_step(p, rho, out.dt, out.max_hermiticity_drift);
        out.steps += steps_per_window;
        out.time = static_cast<double>(out.steps) * out.dt;
        out.residual = windowed_change(rho, snapshot, options.scope, qdim);
        if (out.residual < options.tol) {
            finish(out, model, p, rho);
            return out;
        }
        snapshot = rho;
    }
    throw ConvergenceError("evolve_to_steady: no steady state within " +
                               std::to_string(options.max_steps) + " steps (residual " +
                               std::to_string(out.residual) + ")",
                           out.residual);
}

EvolutionResult evolve_to_steady(const LindbladModel& model, const ComplexMatrix& rho0, double dt,
                                 double tol) {
    EvolveOptions options;
    options.dt = dt;
    options.tol = tol;
    return evolve_to_steady(model, rho0, options);
}

EvolutionResult evolve_for(const LindbladModel& model, const ComplexMatrix& rho0, double duration,
                           double dt) {
    model.validate();
    check_initial_state(model, rho0);
    if (duration < 0.0) throw ConfigError("evolve_for: negative duration");
    const Propagator p = make_propagator(model);
    EvolutionResult out;
    const double dt_max = choose_dt(model, p, dt);
    const auto steps = static_cast<std::size_t>(std::ceil(duration / dt_max));
    out.dt = steps == 0 ? 0.0 : duration / static_cast<double>(steps);
    ComplexMatrix rho = rho0;
    for (std::size_t s = 0; s < steps; ++s) rk4_step(p, rho, out.dt, out.max_hermiticity_drift);
    out.steps = steps;
    out.time = duration;
    finish(out, model, p, rho);
    return out;
}

double expectation(const ComplexMatrix& rho, const ComplexMatrix& op) {
    if (rho.rows() != op.rows() || rho.cols() != op.cols())
        throw ConfigError("expectation: dimension mismatch");
    const Complex v = (rho * op).trace();
    if (std::abs(v.imag()) > 1e-10 * (1.0 + std::abs(v.real())))
        throw NumericalError("expectation: imaginary residue " + std::to_string(v.imag()));
    return v.real();
}

double photon_number(const ComplexMatrix& rho, const FockSpaceConfig& fock) {
    fock.validate();
    const Eigen::Index levels = fock.n_max + 1;
    if (rho.rows() != rho.cols() || rho.rows() % levels != 0)
        throw ConfigError("photon_number: dimension mismatch with Fock space");
    const Eigen::Index qdim = rho.rows() / levels;
    if (qdim != 1 && qdim != 2 && qdim != 4)
        throw ConfigError("photon_number: dimension mismatch with Fock space");
    Complex sum = 0.0;
    for (Eigen::Index n = 1; n < levels; ++n)
        for (Eigen::Index q = 0; q < qdim; ++q) sum += static_cast<double>(n) * rho(n * qdim + q, n * qdim + q);
    if (std::abs(sum.imag()) > 1e-10) throw NumericalError("photon_number: imaginary residue");
    return sum.real();
}

ComplexMatrix embedded_sigma_z(int qubit, int num_qubits, const FockSpaceConfig& fock) {
    if (qubit < 0 || qubit >= num_qubits) throw ConfigError("embedded_sigma_z: qubit index out of range");
    return embed_qubit_op(pauli(Pauli::Z), qubit, num_qubits, fock.n_max);
}

ComplexMatrix vacuum_with_qubits(const DensityMatrix* qubits, const FockSpaceConfig& fock) {
    fock.validate();
    ComplexMatrix vac = ComplexMatrix::Zero(fock.n_max + 1, fock.n_max + 1);
    vac(0, 0) = 1.0;
    return qubits ? kron(vac, qubits->matrix()) : vac;
}

LindbladPhotonResult lindblad_steady_photons(const CavityDriveParams& cav,
                                             std::span<const QubitParams> qubits,
                                             const DensityMatrix* qubit_state,
                                             const FockSpaceConfig& fock,
                                             const EvolveOptions& options) {
    if ((qubit_state == nullptr) != qubits.empty() ||
        (qubit_state && static_cast<std::size_t>(qubit_state->num_qubits()) != qubits.size()))
        throw ConfigError("lindblad_steady_photons: qubit state does not match qubit count");

    LindbladPhotonResult out;
    out.fock = fock;
    for (int attempt = 0; attempt < 2; ++attempt) {
        const LindbladModel model = build_dispersive_model(cav, qubits, out.fock);
        out.evolution = evolve_to_steady(model, vacuum_with_qubits(qubit_state, out.fock), options);
        if (!out.evolution.truncated || attempt == 1) break;
        out.fock.n_max *= 2;
        out.truncation_doubled = true;
    }
    out.photons = photon_number(out.evolution.rho, out.fock);
    return out;
}

}  // namespace qndtomo
