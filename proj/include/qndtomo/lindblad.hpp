#pragma once

#include "qndtomo/linalg.hpp"
#include "qndtomo/steady_state.hpp"

#include <span>
#include <string>
#include <vector>

namespace qndtomo {

struct FockSpaceConfig {
    int n_max = 20;
    /// Steady-state population allowed in level n_max before the run is
    /// flagged as truncated.
    double top_level_tolerance = 1e-6;

    void validate() const;
};

/// Smallest truncation whose Poisson tail above n_max, for the largest mean
/// photon number any branch can reach (4 eps^2 / kappa^2), stays far below the
/// top-level tolerance.
FockSpaceConfig auto_fock_space(const CavityDriveParams& cav, double top_level_tolerance = 1e-6);

struct CollapseOperator {
    double rate = 0.0;
    ComplexMatrix op;
    std::string name;
};

/// Rotating-frame master equation on (cavity Fock space) (x) (qubits); the
/// cavity is the leftmost tensor factor and qubit 1 precedes qubit 2.
struct LindbladModel {
    ComplexMatrix hamiltonian;
    /// Diagonal of the qubit self-energy sum_j (w~_j / 2) sigma_zj. It is
    /// already contained in `hamiltonian`; kept separately so the integrator
    /// can move it into an exact interaction frame.
    Eigen::VectorXd qubit_self_energy;
    std::vector<CollapseOperator> collapse_operators;
    int num_qubits = 0;
    FockSpaceConfig fock;
    /// Cavity decay rate; sets default step size and convergence window.
    double kappa = 0.0;

    Eigen::Index dim() const { return hamiltonian.rows(); }
    void validate() const;
};

/// H = (-Delta_dr + sum_j Gamma_j sigma_zj) a^dagger a + sum_j (w~_j/2) sigma_zj
///     + eps (a^dagger + a),  w~_j = w_j + Gamma_j,
/// with collapse operators kappa D[a], gamma1_j D[sigma_-j] and
/// (gamma_phi_j / 2) D[sigma_zj]. Zero-rate channels are omitted. The qubit
/// self-energy is retained in the Hamiltonian.
LindbladModel build_dispersive_model(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                                     const FockSpaceConfig& fock);

/// -i[H, rho] + sum_k rate_k D[A_k] rho, evaluated densely.
ComplexMatrix lindblad_rhs(const LindbladModel& model, const ComplexMatrix& rho);

enum class ConvergenceScope {
    /// Every matrix entry of the interaction-frame state.
    full_state,
    /// Only entries diagonal in the qubit computational basis; these carry every
    /// observable that commutes with the sigma_zj, including the photon number.
    qnd_blocks,
};

struct EvolveOptions {
    /// RK4 step; 0 selects min(0.02/kappa, 1.5/||L||) with ||L|| an induced-norm
    /// bound on the Liouvillian.
    double dt = 0.0;
    /// Windowed max-norm change below which the state counts as stationary.
    double tol = 1e-10;
    /// Convergence window; 0 selects 10/kappa.
    double window = 0.0;
    std::size_t max_steps = 4'000'000;
    ConvergenceScope scope = ConvergenceScope::full_state;
};

struct EvolutionResult {
    /// Lab-frame (drive rotating frame) state at the final time.
    ComplexMatrix rho;
    double time = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    /// Last windowed max-norm change (0 for fixed-duration runs).
    double residual = 0.0;
    double trace_drift = 0.0;
    /// Largest Hermiticity defect seen before per-step symmetrisation.
    double max_hermiticity_drift = 0.0;
    double top_level_population = 0.0;
    bool truncated = false;
    /// True when the qubit self-energy was integrated exactly in a frame.
    bool used_interaction_frame = false;
};

/// Fixed-step RK4 until the windowed change drops below tol. Throws
/// ConvergenceError (carrying the final residual) when the step budget runs out.
EvolutionResult evolve_to_steady(const LindbladModel& model, const ComplexMatrix& rho0,
                                 const EvolveOptions& options);
EvolutionResult evolve_to_steady(const LindbladModel& model, const ComplexMatrix& rho0, double dt,
                                 double tol);

/// Fixed-step RK4 over a given duration.
EvolutionResult evolve_for(const LindbladModel& model, const ComplexMatrix& rho0, double duration,
                           double dt = 0.0);

/// Tr[rho (a^dagger a (x) I)]; the qubit count is inferred from the dimension.
double photon_number(const ComplexMatrix& rho, const FockSpaceConfig& fock);

/// Tr[rho O] for Hermitian O; throws NumericalError for a large imaginary part.
double expectation(const ComplexMatrix& rho, const ComplexMatrix& op);

/// sigma_z of qubit j (0-based) embedded in the full cavity (x) qubits space.
ComplexMatrix embedded_sigma_z(int qubit, int num_qubits, const FockSpaceConfig& fock);

/// |0><0|_cavity (x) rho_qubits; an empty cavity when qubits is null.
ComplexMatrix vacuum_with_qubits(const DensityMatrix* qubits, const FockSpaceConfig& fock);

struct LindbladPhotonResult {
    double photons = 0.0;
    FockSpaceConfig fock;
    bool truncation_doubled = false;
    EvolutionResult evolution;
};

/// Builds the dispersive model, starts from an empty cavity with the given
/// qubit state, integrates to steady state and returns <a^dagger a>. Doubles
/// n_max once when the truncation flag trips.
LindbladPhotonResult lindblad_steady_photons(const CavityDriveParams& cav,
                                             std::span<const QubitParams> qubits,
                                             const DensityMatrix* qubit_state,
                                             const FockSpaceConfig& fock,
                                             const EvolveOptions& options = {});

}  // namespace qndtomo
