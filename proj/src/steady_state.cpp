#include "qndtomo/steady_state.hpp"

#include "qndtomo/errors.hpp"

#include <cmath>
#include <sstream>

namespace qndtomo {

namespace {

constexpr double kDenominatorFloor = 1e-300;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

void check_denominator(double magnitude, const char* where) {
    if (!(magnitude >= kDenominatorFloor))
        throw NumericalError(std::string(where) + ": denominator underflow (pathological parameters)");
}

}  // namespace

CavityDriveParams CavityDriveParams::with_detuning(double delta_dr) const {
    CavityDriveParams out = *this;
    out.omega_d = omega_r + delta_dr;
    return out;
}

void CavityDriveParams::validate() const {
    require_finite(omega_r, "omega_r");
    require_finite(kappa, "kappa");
    require_finite(epsilon, "epsilon");
    require_finite(omega_d, "omega_d");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (epsilon < 0.0) throw ConfigError("epsilon must be non-negative");
}

double QubitParams::dispersive_shift(double omega_r) const {
    const double delta = detuning(omega_r);
    if (delta == 0.0) throw ConfigError("qubit is resonant with the cavity (Delta = 0)");
    return g * g / delta;
}

void QubitParams::validate(double omega_r) const {
    require_finite(omega_q, "omega_q");
    require_finite(g, "g");
    require_finite(gamma1, "gamma1");
    require_finite(gamma_phi, "gamma_phi");
    if (detuning(omega_r) == 0.0) throw ConfigError("qubit is resonant with the cavity (Delta = 0)");
    if (gamma1 < 0.0) throw ConfigError("gamma1 must be non-negative");
    if (gamma_phi < 0.0) throw ConfigError("gamma_phi must be non-negative");
}

QubitParams QubitParams::from_dispersive_shift(double shift, double omega_r, double gamma1,
                                               double gamma_phi, double coupling_ratio) {
    if (shift == 0.0) throw ConfigError("dispersive shift must be non-zero");
    if (!(coupling_ratio > 0.0)) throw ConfigError("coupling ratio must be positive");
    // Gamma = g^2/Delta with g = ratio*|Delta|  =>  Delta = Gamma / ratio^2.
    const double delta = shift / (coupling_ratio * coupling_ratio);
    QubitParams q;
    q.omega_q = omega_r + delta;
    q.g = std::sqrt(shift * delta);
    q.gamma1 = gamma1;
    q.gamma_phi = gamma_phi;
    return q;
}

std::optional<std::string> dispersivity_warning(const QubitParams& q, double omega_r,
                                                double threshold) {
    const double ratio = std::abs(q.g / q.detuning(omega_r));
    if (ratio < threshold) return std::nullopt;
    std::ostringstream os;
    os << "|g/Delta| = " << ratio << " is not small compared to the dispersive threshold "
       << threshold;
    return os.str();
}

void QubitMoments::validate() const {
    if (sz.size() > 2) throw ConfigError("QubitMoments: at most two qubits are supported");
    for (double v : sz)
        if (!(std::abs(v) <= 1.0 + 1e-12)) throw ConfigError("QubitMoments: |<sigma_z>| exceeds 1");
    if (sz.size() == 2 && !szsz) throw ConfigError("QubitMoments: two qubits need <sz1 sz2>");
    if (szsz && !(std::abs(*szsz) <= 1.0 + 1e-12))
        throw ConfigError("QubitMoments: |<sz1 sz2>| exceeds 1");
}

QubitMoments QubitMoments::from_populations(std::span<const double> p) {
    QubitMoments m;
    if (p.size() == 2) {
        m.sz = {p[0] - p[1]};
    } else if (p.size() == 4) {
        m.sz = {p[0] + p[1] - p[2] - p[3], p[0] - p[1] + p[2] - p[3]};
        m.szsz = p[0] - p[1] - p[2] + p[3];
    } else {
        throw ConfigError("QubitMoments::from_populations: expected 2 or 4 populations");
    }
    return m;
}

TwoQubitCoeffs TwoQubitCoeffs::build(const CavityDriveParams& cav, const QubitParams& q1,
                                     const QubitParams& q2, const QubitMoments& m) {
    if (m.sz.size() != 2 || !m.szsz) throw ConfigError("two-qubit moments required");
    const double delta = cav.detuning();
    const QubitParams* qs[2] = {&q1, &q2};
    TwoQubitCoeffs c{};
    c.A = Complex(-cav.kappa / 2.0, delta);
    for (int j = 0; j < 2; ++j) {
        const double shift = qs[j]->dispersive_shift(cav.omega_r);
        c.B[j] = Complex(0.0, shift);
        c.D[j] = c.A - qs[j]->gamma1;
        c.E[j] = Complex(qs[j]->gamma1, shift);
        c.G[j] = m.sz[static_cast<std::size_t>(j)];
    }
    c.F = c.A - q1.gamma1 - q2.gamma1;
    c.G12 = *m.szsz;
    return c;
}

double empty_cavity_peak(const CavityDriveParams& cav) {
    return 4.0 * cav.epsilon * cav.epsilon / (cav.kappa * cav.kappa);
}

double empty_cavity_photons(const CavityDriveParams& cav) {
    const double delta = cav.detuning();
    const double half = cav.kappa / 2.0;
    return cav.epsilon * cav.epsilon / (delta * delta + half * half);
}

double single_qubit_photons(const CavityDriveParams& cav, const QubitParams& q,
                            const QubitMoments& m) {
    if (m.sz.size() != 1) throw ConfigError("single_qubit_photons: expected one <sigma_z>");
    const double kappa = cav.kappa;
    const double gamma = q.gamma1;
    const double shift = q.dispersive_shift(cav.omega_r);
    const double delta = cav.detuning();
    const double sz = m.sz[0];

    const double p = kappa * kappa / 4.0 + gamma * kappa / 2.0 + shift * shift - delta * delta;
    const double r = kappa * delta + gamma * delta + gamma * shift;
    const double denominator = p * p + r * r;
    check_denominator(denominator, "single_qubit_photons");
    const double numerator = (kappa / 2.0 + gamma) * p + (delta + shift * sz) * r;
    return cav.epsilon * cav.epsilon * (2.0 / kappa) * numerator / denominator;
}

TwoQubitEvaluation two_qubit_photons_detail(const CavityDriveParams& cav, const QubitParams& q1,
                                            const QubitParams& q2, const QubitMoments& m) {
    const TwoQubitCoeffs c = TwoQubitCoeffs::build(cav, q1, q2, m);
    const Complex& A = c.A;
    const Complex& F = c.F;
    const Complex* B = c.B;
    const Complex* D = c.D;
    const Complex* E = c.E;
    const double* G = c.G;

    // Sums over ordered pairs (j, j') with j != j'.
    const Complex sum_bdg = B[0] * D[1] * G[0] + B[1] * D[0] * G[1];
    const Complex sum_eg = E[0] * G[1] + E[1] * G[0];
    const Complex numerator = F * (sum_bdg + D[0] * D[1]) +
                              B[0] * B[1] * (c.G12 * (D[0] + D[1]) + sum_eg) -
                              (B[0] * E[0] * (D[0] + B[0] * G[0]) + B[1] * E[1] * (D[1] + B[1] * G[1]));
    const Complex be_diff = B[0] * E[0] - B[1] * E[1];
    const Complex denominator = B[0] * E[0] * (D[1] * F + D[0] * A) +
                                B[1] * E[1] * (D[0] * F + D[1] * A) - be_diff * be_diff -
                                A * D[0] * D[1] * F;
    check_denominator(std::abs(denominator), "two_qubit_photons");

    TwoQubitEvaluation out;
    out.bracket = numerator / denominator;
    out.photons = cav.epsilon * cav.epsilon * (2.0 / cav.kappa) * out.bracket.real();
    out.imag_to_real_ratio =
        out.bracket.real() == 0.0 ? 0.0 : std::abs(out.bracket.imag() / out.bracket.real());
    return out;
}

double two_qubit_photons(const CavityDriveParams& cav, const QubitParams& q1,
                         const QubitParams& q2, const QubitMoments& m) {
    return two_qubit_photons_detail(cav, q1, q2, m).photons;
}

double closed_form_photons(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                           const QubitMoments& m) {
    switch (qubits.size()) {
    case 0:
        return empty_cavity_photons(cav);
    case 1:
        return single_qubit_photons(cav, qubits[0], m);
    case 2:
        return two_qubit_photons(cav, qubits[0], qubits[1], m);
    default:
        throw ConfigError("closed forms exist for at most two qubits");
    }
}

MomentSolution moment_solve(SystemKind system, const CavityDriveParams& cav,
                            std::span<const QubitParams> qubits, const QubitMoments& m) {
    const std::size_t expected = system == SystemKind::empty       ? 0
                                 : system == SystemKind::one_qubit ? 1
                                                                   : 2;
    if (qubits.size() != expected) throw ConfigError("moment_solve: qubit count does not match system");
    if (m.sz.size() != expected) throw ConfigError("moment_solve: moment count does not match system");
    if (expected == 2 && !m.szsz) throw ConfigError("moment_solve: two-qubit system needs <sz1 sz2>");

    const int n = static_cast<int>(expected);
    const int size = 1 << n;
    const Complex a(-cav.kappa / 2.0, cav.detuning());

    std::vector<double> shifts(expected);
    for (std::size_t j = 0; j < expected; ++j) shifts[j] = qubits[j].dispersive_shift(cav.omega_r);

    // Frozen pure-qubit moments G_S = <prod_{j in S} sigma_zj(0)>.
    auto frozen = [&](int mask) -> double {
        if (mask == 0) return 1.0;
        if (mask == 3) return *m.szsz;
        return m.sz[mask == 1 ? 0 : 1];
    };

    // Row S of d/dt <a Z_S> = M x + b:
    //   (A - sum_{j in S} gamma_j) x_S - i sum_{j not in S} Gamma_j x_{S+j}
    //   - sum_{j in S} (i Gamma_j + gamma_j) x_{S-j} - i eps G_S
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(size, size);
    Eigen::VectorXcd rhs(size);
    for (int s = 0; s < size; ++s) {
        Complex diag = a;
        for (int j = 0; j < n; ++j) {
            const int bit = 1 << j;
            if (s & bit) {
                diag -= qubits[static_cast<std::size_t>(j)].gamma1;
                mat(s, s & ~bit) -= Complex(qubits[static_cast<std::size_t>(j)].gamma1,
                                            shifts[static_cast<std::size_t>(j)]);
            } else {
                mat(s, s | bit) -= Complex(0.0, shifts[static_cast<std::size_t>(j)]);
            }
        }
        mat(s, s) += diag;
        rhs(s) = Complex(0.0, cav.epsilon * frozen(s));  // -b
    }

    Eigen::FullPivLU<Eigen::MatrixXcd> lu(mat);
    if (!lu.isInvertible()) throw NumericalError("moment_solve: singular moment system (degenerate parameters)");

    MomentSolution out;
    out.amplitudes = lu.solve(rhs);
    out.photons = -(2.0 * cav.epsilon / cav.kappa) * out.amplitudes(0).imag();
    return out;
}

double moment_steady_state(SystemKind system, const CavityDriveParams& cav,
                           std::span<const QubitParams> qubits, const QubitMoments& m) {
    return moment_solve(system, cav, qubits, m).photons;
}

double lorentzian_mixture_oracle(const CavityDriveParams& cav, std::span<const double> shifts,
                                 std::span<const double> weights) {
    if (shifts.size() != weights.size()) throw ConfigError("lorentzian_mixture_oracle: size mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ConfigError("lorentzian_mixture_oracle: negative weight");
        total += w;
    }
    if (total > 1.0 + 1e-12) throw ConfigError("lorentzian_mixture_oracle: weights sum above 1");

    const double delta = cav.detuning();
    const double half = cav.kappa / 2.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < shifts.size(); ++k) {
        const double d = delta - shifts[k];
        sum += weights[k] / (d * d + half * half);
    }
    return cav.epsilon * cav.epsilon * sum;
}

int sigma_z_shift_sign() {
    static const int sign = [] {
        CavityDriveParams cav{0.0, 1.0, 1.0, 0.0};
        const double shift = -5.0;
        const QubitParams q = QubitParams::from_dispersive_shift(shift, cav.omega_r, 0.0);
        const QubitMoments up{{1.0}, std::nullopt};
        const double at_plus = single_qubit_photons(cav.with_detuning(shift), q, up);
        const double at_minus = single_qubit_photons(cav.with_detuning(-shift), q, up);
        return at_plus > at_minus ? 1 : -1;
    }();
    return sign;
}

double logic_state_shift(std::string_view bits, std::span<const QubitParams> qubits,
                         double omega_r) {
    if (bits.size() != qubits.size()) throw ConfigError("logic_state_shift: bit string length mismatch");
    double pos = 0.0;
    for (std::size_t j = 0; j < bits.size(); ++j) {
        if (bits[j] != '0' && bits[j] != '1') throw ConfigError("logic_state_shift: bits must be 0 or 1");
        const double z = bits[j] == '0' ? 1.0 : -1.0;
        pos += z * qubits[j].dispersive_shift(omega_r);
    }
    return sigma_z_shift_sign() * pos;
}

}  // namespace qndtomo
