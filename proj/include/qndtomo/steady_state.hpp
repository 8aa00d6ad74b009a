#pragma once

#include "qndtomo/linalg.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qndtomo {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Linear MHz to angular rad/s.
constexpr double mhz(double f) { return kTwoPi * 1e6 * f; }
/// Angular rad/s to linear MHz.
constexpr double to_mhz(double w) { return w / (kTwoPi * 1e6); }

/// Driven resonator. All fields are angular quantities in rad/s.
struct CavityDriveParams {
    double omega_r = 0.0;
    double kappa = 0.0;
    double epsilon = 0.0;
    double omega_d = 0.0;

    double detuning() const { return omega_d - omega_r; }
    CavityDriveParams with_detuning(double delta_dr) const;
    /// kappa > 0, epsilon >= 0, all finite. Throws ConfigError.
    void validate() const;
};

struct QubitParams {
    double omega_q = 0.0;
    double g = 0.0;
    double gamma1 = 0.0;
    double gamma_phi = 0.0;

    double detuning(double omega_r) const { return omega_q - omega_r; }
    /// Gamma = g^2 / Delta.
    double dispersive_shift(double omega_r) const;
    void validate(double omega_r) const;

    /// Picks a qubit frequency and coupling realising the requested dispersive
    /// shift with |g/Delta| = coupling_ratio.
    static QubitParams from_dispersive_shift(double shift, double omega_r, double gamma1,
                                             double gamma_phi = 0.0, double coupling_ratio = 0.05);
};

/// Non-empty when |g/Delta| exceeds the dispersive threshold.
std::optional<std::string> dispersivity_warning(const QubitParams& q, double omega_r,
                                                double threshold = 0.1);

/// Initial qubit moments <sigma_zj(0)> and <sigma_z1 sigma_z2 (0)>, frozen
/// during readout.
struct QubitMoments {
    std::vector<double> sz;
    std::optional<double> szsz;

    std::size_t num_qubits() const { return sz.size(); }
    void validate() const;

    /// Moments of a state diagonal in the computational basis with the given
    /// populations (2 or 4 entries, basis order |0..> first).
    static QubitMoments from_populations(std::span<const double> populations);
};

/// Coefficients of the two-qubit closed form, built from the parameters.
struct TwoQubitCoeffs {
    Complex A;
    Complex B[2];
    Complex D[2];
    Complex E[2];
    Complex F;
    double G[2];
    double G12;

    static TwoQubitCoeffs build(const CavityDriveParams& cav, const QubitParams& q1,
                                const QubitParams& q2, const QubitMoments& m);
};

/// eps^2 / [(omega_d - omega_r)^2 + (kappa/2)^2]
double empty_cavity_photons(const CavityDriveParams& cav);

/// Closed-form steady-state photon number with one dispersively coupled qubit
/// whose <sigma_z> is frozen at m.sz[0].
double single_qubit_photons(const CavityDriveParams& cav, const QubitParams& q,
                            const QubitMoments& m);

struct TwoQubitEvaluation {
    double photons = 0.0;
    /// The complex bracket whose real part, times 2 eps^2/kappa, is the photon
    /// number. Its imaginary part equals Re<a>_ss / eps.
    Complex bracket;
    double imag_to_real_ratio = 0.0;
};

TwoQubitEvaluation two_qubit_photons_detail(const CavityDriveParams& cav, const QubitParams& q1,
                                            const QubitParams& q2, const QubitMoments& m);
double two_qubit_photons(const CavityDriveParams& cav, const QubitParams& q1,
                         const QubitParams& q2, const QubitMoments& m);

/// Dispatches to the closed form matching the number of qubits (0, 1 or 2).
double closed_form_photons(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                           const QubitMoments& m);

enum class SystemKind { empty, one_qubit, two_qubit };

struct MomentSolution {
    /// Moments <a prod_{j in S} sigma_zj> indexed by the bit mask of S.
    Eigen::VectorXcd amplitudes;
    double photons = 0.0;
};

/// Steady state of the linear moment equations for <a>, <a sigma_z>, ... with
/// all pure-qubit moments frozen at their initial values, then
/// <a^dagger a> = -(2 eps / kappa) Im <a>. Throws NumericalError when the
/// system matrix is singular.
MomentSolution moment_solve(SystemKind system, const CavityDriveParams& cav,
                            std::span<const QubitParams> qubits, const QubitMoments& m);
double moment_steady_state(SystemKind system, const CavityDriveParams& cav,
                           std::span<const QubitParams> qubits, const QubitMoments& m);

/// eps^2 sum_k w_k / [(Delta_dr - s_k)^2 + (kappa/2)^2]
double lorentzian_mixture_oracle(const CavityDriveParams& cav, std::span<const double> shifts,
                                 std::span<const double> weights);

/// Empty-cavity resonant value 4 eps^2 / kappa^2, the normalisation for
/// relative heights.
double empty_cavity_peak(const CavityDriveParams& cav);

/// Sign s such that a qubit frozen at <sigma_z> = +1 produces its peak at
/// Delta_dr = s * Gamma. Determined by evaluating the single-qubit closed
/// form at both candidate positions, not assumed.
int sigma_z_shift_sign();

/// Peak position of a computational basis state, e.g. "01":
/// sum_j sign * z_j * Gamma_j with z_j = +1 for bit 0 and -1 for bit 1.
double logic_state_shift(std::string_view bits, std::span<const QubitParams> qubits,
                         double omega_r);

}  // namespace qndtomo
