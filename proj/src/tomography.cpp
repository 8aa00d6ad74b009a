#include "qndtomo/tomography.hpp"

#include "qndtomo/errors.hpp"
#include "qndtomo/json_io.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qndtomo {

namespace {

constexpr double kRankThreshold = 1e-10;

int label_count(int num_qubits) { return 1 << (2 * num_qubits); }
Eigen::Index register_dim(int num_qubits) { return Eigen::Index{1} << num_qubits; }

std::string basis_bits(Eigen::Index k, int num_qubits) {
    std::string s;
    for (int j = num_qubits - 1; j >= 0; --j) s.push_back((k >> j) & 1 ? '1' : '0');
    return s;
}

std::string format_coefficient(double c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", c);
    return buf;
}

/// Reduced row-echelon form of the null-space basis, one string per row.
std::vector<std::string> describe_null_space(const RealMatrix& null_basis,
                                             const std::vector<PauliLabel>& columns) {
    RealMatrix m = null_basis.transpose();
    const Eigen::Index rows = m.rows();
    const Eigen::Index cols = m.cols();
    Eigen::Index lead = 0;
    for (Eigen::Index r = 0; r < rows && lead < cols; ++lead) {
        Eigen::Index pivot = r;
        for (Eigen::Index i = r + 1; i < rows; ++i)
            if (std::abs(m(i, lead)) > std::abs(m(pivot, lead))) pivot = i;
        if (std::abs(m(pivot, lead)) < 1e-9) continue;
        m.row(r).swap(m.row(pivot));
        m.row(r) /= m(r, lead);
        for (Eigen::Index i = 0; i < rows; ++i)
            if (i != r) m.row(i) -= m(i, lead) * m.row(r);
        ++r;
    }
    std::vector<std::string> out;
    for (Eigen::Index r = 0; r < rows; ++r) {
        std::string s;
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double v = m(r, c);
            if (std::abs(v) < 1e-9) continue;
            const double mag = std::abs(v);
            if (s.empty()) {
                if (v < 0) s += "-";
            } else {
                s += v < 0 ? " - " : " + ";
            }
            if (std::abs(mag - 1.0) > 1e-9) s += format_coefficient(mag) + " ";
            s += columns[static_cast<std::size_t>(c)].str();
        }
        if (!s.empty()) out.push_back(s);
    }
    return out;
}

void check_readouts(const std::vector<std::vector<double>>& readouts, const MeasurementPlan& plan) {
    if (readouts.size() != plan.size())
        throw ConfigError("readouts: expected " + std::to_string(plan.size()) + " settings, got " +
                          std::to_string(readouts.size()));
    const auto dim = static_cast<std::size_t>(register_dim(plan.num_qubits()));
    for (std::size_t s = 0; s < readouts.size(); ++s) {
        const auto& p = readouts[s];
        const std::string where = "readout for setting " + plan.settings()[s].str();
        if (p.size() != dim) throw ConfigError(where + ": expected " + std::to_string(dim) + " populations");
        double sum = 0.0;
        for (double v : p) {
            if (!std::isfinite(v) || v < -0.05) throw ConfigError(where + ": population below -0.05");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 0.1) throw ConfigError(where + ": populations sum to " + format_coefficient(sum));
    }
}

}  // namespace

// --- coefficient containers ----------------------------------------------------

double BlochVector::norm() const { return std::sqrt(rx * rx + ry * ry + rz * rz); }

BlochVector BlochVector::from_density(const DensityMatrix& rho) {
    if (rho.num_qubits() != 1) throw ConfigError("BlochVector: single-qubit state required");
    const auto r = pauli_expectations(rho);
    return {r.at(PauliLabel::parse("x")), r.at(PauliLabel::parse("y")), r.at(PauliLabel::parse("z"))};
}

DensityMatrix BlochVector::to_density() const {
    ComplexMatrix m = identity(2) + rx * pauli(Pauli::X) + ry * pauli(Pauli::Y) + rz * pauli(Pauli::Z);
    return DensityMatrix(m / 2.0);
}

double PauliCoefficients::operator[](const PauliLabel& label) const {
    if (label.num_qubits() != num_qubits) throw ConfigError("PauliCoefficients: label length mismatch");
    return values.at(static_cast<std::size_t>(label.index()));
}

PauliCoefficients PauliCoefficients::from_density(const DensityMatrix& rho) {
    return from_map(pauli_expectations(rho), rho.num_qubits());
}

PauliCoefficients PauliCoefficients::from_map(const std::map<PauliLabel, double>& r, int num_qubits) {
    PauliCoefficients out;
    out.num_qubits = num_qubits;
    out.values.assign(static_cast<std::size_t>(label_count(num_qubits)), 0.0);
    for (const auto& [label, v] : r) {
        if (label.num_qubits() != num_qubits) throw ConfigError("PauliCoefficients: label length mismatch");
        out.values[static_cast<std::size_t>(label.index())] = v;
    }
    return out;
}

std::map<PauliLabel, double> PauliCoefficients::to_map() const {
    std::map<PauliLabel, double> out;
    for (const auto& label : PauliLabel::all(num_qubits)) out.emplace(label, (*this)[label]);
    return out;
}

ComplexMatrix PauliCoefficients::assemble() const { return from_pauli_expectations(to_map(), num_qubits); }

QubitMoments moments_from_density(const DensityMatrix& rho) {
    const auto r = pauli_expectations(rho);
    QubitMoments m;
    if (rho.num_qubits() == 1) {
        m.sz = {r.at(PauliLabel::parse("z"))};
    } else {
        m.sz = {r.at(PauliLabel::parse("z0")), r.at(PauliLabel::parse("0z"))};
        m.szsz = r.at(PauliLabel::parse("zz"));
    }
    return m;
}

ZRow zrow_from_populations(std::span<const double> p) {
    if (p.size() != 4) throw ConfigError("zrow_from_populations: expected four populations");
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < -0.05) throw ConfigError("zrow_from_populations: population below -0.05");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 0.1) throw ConfigError("zrow_from_populations: populations sum far from 1");
    return {p[0] + p[1] + p[2] + p[3], p[0] - p[1] + p[2] - p[3], p[0] + p[1] - p[2] - p[3],
            p[0] - p[1] - p[2] + p[3]};
}

// --- plans -----------------------------------------------------------------------

MeasurementPlan::MeasurementPlan(int num_qubits, std::vector<GateSequence> settings)
    : num_qubits_(num_qubits), settings_(std::move(settings)) {
    if (num_qubits < 1 || num_qubits > 2) throw ConfigError("MeasurementPlan: 1 or 2 qubits");
    if (settings_.empty()) throw ConfigError("MeasurementPlan: no settings");
    for (const auto& s : settings_)
        if (s.num_qubits() != num_qubits) throw ConfigError("MeasurementPlan: setting register size differs");
}

MeasurementPlan MeasurementPlan::table_one() {
    return parse({"identity", "UFF*Ux1", "UFF*Uy1", "UFF*Uz1", "Uy1*Uz1*UFF", "Uy2*Uz2*UFF"}, 2);
}

MeasurementPlan MeasurementPlan::single_qubit() { return parse({"identity", "Ux1", "Uy1"}, 1); }

MeasurementPlan MeasurementPlan::parse(const std::vector<std::string>& settings, int num_qubits) {
    std::vector<GateSequence> seqs;
    seqs.reserve(settings.size());
    for (const auto& s : settings) seqs.push_back(GateSequence::parse(s, num_qubits));
    return MeasurementPlan(num_qubits, std::move(seqs));
}

std::vector<std::string> MeasurementPlan::labels() const {
    std::vector<std::string> out;
    for (const auto& s : settings_) out.push_back(s.str());
    return out;
}

// --- sensitivity -----------------------------------------------------------------

SensitivityMatrix derive_sensitivity(const MeasurementPlan& plan) {
    const int n = plan.num_qubits();
    const Eigen::Index dim = register_dim(n);
    SensitivityMatrix out;
    out.num_qubits = n;
    out.columns = PauliLabel::all(n);
    out.matrix = RealMatrix::Zero(static_cast<Eigen::Index>(plan.size()) * dim,
                                  static_cast<Eigen::Index>(out.columns.size()));
    for (std::size_t s = 0; s < plan.size(); ++s) {
        const ComplexMatrix w = plan.settings()[s].product();
        for (Eigen::Index k = 0; k < dim; ++k)
            out.row_names.push_back(plan.settings()[s].str() + "|" + basis_bits(k, n));
        for (std::size_t c = 0; c < out.columns.size(); ++c) {
            const ComplexMatrix rotated = w * out.columns[c].matrix() * w.adjoint();
            for (Eigen::Index k = 0; k < dim; ++k) {
                const Complex v = rotated(k, k) / static_cast<double>(dim);
                if (std::abs(v.imag()) > 1e-12) throw NumericalError("derive_sensitivity: complex diagonal");
                double re = v.real();
                if (std::abs(re) < 1e-14) re = 0.0;
                out.matrix(static_cast<Eigen::Index>(s) * dim + k, static_cast<Eigen::Index>(c)) = re;
            }
        }
    }

    Eigen::JacobiSVD<RealMatrix> svd(out.matrix, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    out.rank = static_cast<int>((sv.array() > kRankThreshold).count());
    const Eigen::Index cols = out.matrix.cols();
    if (out.rank < cols) {
        const RealMatrix null_basis = svd.matrixV().rightCols(cols - out.rank);
        for (Eigen::Index c = 0; c < cols; ++c)
            if (null_basis.row(c).norm() > 1e-8)
                out.unconstrained.push_back(out.columns[static_cast<std::size_t>(c)].str());
        out.null_combinations = describe_null_space(null_basis, out.columns);
    }
    return out;
}

AugmentedPlan augment_plan(const MeasurementPlan& plan) {
    const int n = plan.num_qubits();
    std::vector<UnitaryGate> alphabet;
    for (int q = 1; q <= n; ++q)
        for (GateKind k : {GateKind::Ux, GateKind::Uy, GateKind::Uz}) alphabet.push_back(make_gate(k, q, n));
    if (n == 2) alphabet.push_back(make_gate(GateKind::UFF, 0, n));

    std::vector<GateSequence> candidates;
    const std::size_t a = alphabet.size();
    for (std::size_t len = 1; len <= 3; ++len) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < len; ++i) total *= a;
        for (std::size_t code = 0; code < total; ++code) {
            GateSequence seq(n);
            std::size_t rest = code;
            std::vector<std::size_t> digits(len);
            for (std::size_t i = len; i-- > 0;) {
                digits[i] = rest % a;
                rest /= a;
            }
            // digits are listed in product order; apply the rightmost first.
            for (std::size_t i = len; i-- > 0;) seq.then(alphabet[digits[i]]);
            candidates.push_back(std::move(seq));
        }
    }

    std::vector<GateSequence> settings = plan.settings();
    AugmentedPlan out{plan, {}, derive_sensitivity(plan).rank, 0};
    int rank = out.initial_rank;
    const int target = label_count(n);
    while (rank < target) {
        int best_rank = rank;
        const GateSequence* best = nullptr;
        for (const auto& cand : candidates) {
            std::vector<GateSequence> trial = settings;
            trial.push_back(cand);
            const int r = derive_sensitivity(MeasurementPlan(n, trial)).rank;
            if (r > best_rank) {
                best_rank = r;
                best = &cand;
                if (r == target) break;
            }
        }
        if (!best) throw NumericalError("augment_plan: no candidate increases the rank");
        settings.push_back(*best);
        out.added.push_back(best->str());
        rank = best_rank;
    }
    out.plan = MeasurementPlan(n, settings);
    out.final_rank = rank;
    return out;
}

std::vector<std::vector<double>> simulate_ideal_readout(const MeasurementPlan& plan,
                                                        const DensityMatrix& rho) {
    if (rho.num_qubits() != plan.num_qubits()) throw ConfigError("simulate_ideal_readout: register size differs");
    std::vector<std::vector<double>> out;
    for (const auto& seq : plan.settings()) out.push_back(apply_sequence(seq, rho).populations());
    return out;
}

// --- reconstruction --------------------------------------------------------------

Reconstruction reconstruct(const std::vector<std::vector<double>>& readouts, const MeasurementPlan& plan) {
    check_readouts(readouts, plan);
    const SensitivityMatrix sens = derive_sensitivity(plan);
    if (!sens.full_rank()) {
        std::string names;
        for (const auto& u : sens.unconstrained) names += (names.empty() ? "" : ", ") + u;
        throw PlanInsufficientError("measurement plan has rank " + std::to_string(sens.rank) + " of " +
                                        std::to_string(sens.columns.size()) +
                                        "; unconstrained coefficients: " + names,
                                    sens.rank, sens.unconstrained);
    }
    Eigen::VectorXd b(sens.matrix.rows());
    Eigen::Index row = 0;
    for (const auto& p : readouts)
        for (double v : p) b(row++) = v;

    const Eigen::VectorXd r = sens.matrix.colPivHouseholderQr().solve(b);

    Reconstruction out;
    out.rank = sens.rank;
    out.residual = (sens.matrix * r - b).norm();
    out.coefficients.num_qubits = plan.num_qubits();
    out.coefficients.values.assign(r.data(), r.data() + r.size());
    out.solved_identity = out.coefficients.values[0];
    out.coefficients.values[0] = 1.0;
    ComplexMatrix m = out.coefficients.assemble();
    m = 0.5 * (m + m.adjoint()).eval();
    out.rho = DensityMatrix(std::move(m));
    out.min_eigenvalue = out.rho.min_eigenvalue();
    return out;
}

Reconstruction reconstruct_two(const std::vector<std::vector<double>>& readouts, const MeasurementPlan& plan) {
    if (plan.num_qubits() != 2) throw ConfigError("reconstruct_two: two-qubit plan required");
    return reconstruct(readouts, plan);
}

SingleQubitReconstruction reconstruct_single(const std::vector<std::vector<double>>& readouts,
                                             const MeasurementPlan& plan) {
    if (plan.num_qubits() != 1) throw ConfigError("reconstruct_single: single-qubit plan required");
    SingleQubitReconstruction out;
    out.detail = reconstruct(readouts, plan);
    out.bloch = {out.detail.coefficients.at("x"), out.detail.coefficients.at("y"),
                 out.detail.coefficients.at("z")};
    out.rho = out.detail.rho;
    return out;
}

// --- pipelines -------------------------------------------------------------------

std::string to_string(ReadoutMode mode) { return mode == ReadoutMode::spectral ? "spectral" : "ideal"; }

ReadoutMode readout_mode_from_string(std::string_view name) {
    if (name == "ideal") return ReadoutMode::ideal;
    if (name == "spectral") return ReadoutMode::spectral;
    throw ConfigError("unknown readout mode '" + std::string(name) + "'");
}

PipelineResult spectral_pipeline(const DensityMatrix& rho_true, const CavityDriveParams& cav,
                                 std::span<const QubitParams> qubits, const MeasurementPlan& plan,
                                 HeightMode mode, int grid_points) {
    cav.validate();
    if (static_cast<int>(qubits.size()) != plan.num_qubits() || rho_true.num_qubits() != plan.num_qubits())
        throw ConfigError("spectral_pipeline: state, qubits and plan sizes differ");

    const PredictedShifts shifts = predicted_shift_positions(qubits, cav.omega_r, cav.kappa);
    if (shifts.degenerate)
        throw DegeneracyError("logic-state peaks are only " + format_coefficient(to_mhz(shifts.min_separation)) +
                              " MHz apart (kappa = " + format_coefficient(to_mhz(cav.kappa)) +
                              " MHz); move the dispersive shifts apart so all sums +-Gamma_1 +-Gamma_2 differ "
                              "by more than kappa");
    const std::vector<double> positions = shifts.positions();
    const DetuningGrid grid = DetuningGrid::around(positions, cav.kappa, grid_points);

    PipelineResult out;
    out.mode = ReadoutMode::spectral;
    std::vector<std::vector<double>> readouts;
    for (const auto& seq : plan.settings()) {
        const DensityMatrix rotated = apply_sequence(seq, rho_true);
        const SpectrumTrace trace = sweep(cav, qubits, moments_from_density(rotated), grid);
        const PeakReadout peaks = relative_heights(trace, positions, mode);

        SettingReadout sr;
        sr.setting = seq.str();
        for (const auto& t : shifts.tags) sr.states.push_back(t.state);
        sr.positions = positions;
        sr.heights = peaks.heights;
        double clipped_sum = 0.0;
        for (double h : peaks.heights) {
            sr.height_sum += h;
            const double c = std::clamp(h, 0.0, 1.0);
            sr.populations.push_back(c);
            clipped_sum += c;
        }
        if (!(clipped_sum > 0.0)) throw NumericalError("spectral_pipeline: all peak heights vanish for " + sr.setting);
        for (double& p : sr.populations) p /= clipped_sum;
        readouts.push_back(sr.populations);
        out.settings.push_back(std::move(sr));
    }
    out.reconstruction = reconstruct(readouts, plan);
    out.max_entry_error = max_abs_diff(out.reconstruction.rho.matrix(), rho_true.matrix());
    return out;
}

PipelineResult ideal_pipeline(const DensityMatrix& rho_true, const MeasurementPlan& plan) {
    PipelineResult out;
    out.mode = ReadoutMode::ideal;
    const auto readouts = simulate_ideal_readout(plan, rho_true);
    for (std::size_t s = 0; s < plan.size(); ++s) {
        SettingReadout sr;
        sr.setting = plan.settings()[s].str();
        for (Eigen::Index k = 0; k < rho_true.dim(); ++k) sr.states.push_back(basis_bits(k, plan.num_qubits()));
        sr.heights = readouts[s];
        for (double h : sr.heights) sr.height_sum += h;
        sr.populations = readouts[s];
        out.settings.push_back(std::move(sr));
    }
    out.reconstruction = reconstruct(readouts, plan);
    out.max_entry_error = max_abs_diff(out.reconstruction.rho.matrix(), rho_true.matrix());
    return out;
}

nlohmann::json report_to_json(const PipelineResult& result, const DensityMatrix& rho_true,
                              const SensitivityMatrix& sensitivity) {
    using nlohmann::json;
    const Reconstruction& rec = result.reconstruction;
    const PauliCoefficients truth = PauliCoefficients::from_density(rho_true);

    json r_table = json::array();
    for (const auto& label : PauliLabel::all(rho_true.num_qubits()))
        r_table.push_back({{"label", label.str()}, {"true", truth[label]}, {"reconstructed", rec.coefficients[label]}});

    auto part_table = [](const ComplexMatrix& m, bool imag) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(imag ? m(i, j).imag() : m(i, j).real());
            rows.push_back(row);
        }
        return rows;
    };

    json settings = json::array();
    for (const auto& s : result.settings) {
        json entry{{"setting", s.setting},
                   {"states", s.states},
                   {"heights", s.heights},
                   {"height_sum", s.height_sum},
                   {"populations", s.populations}};
        if (!s.positions.empty()) {
            json mhz_positions = json::array();
            for (double p : s.positions) mhz_positions.push_back(to_mhz(p));
            entry["positions_mhz"] = mhz_positions;
        }
        settings.push_back(entry);
    }

    json out{{"num_qubits", rho_true.num_qubits()},
             {"mode", to_string(result.mode)},
             {"rank", sensitivity.rank},
             {"unconstrained", sensitivity.unconstrained},
             {"true_matrix", matrix_to_json(rho_true.matrix())},
             {"reconstructed_matrix", matrix_to_json(rec.rho.matrix())},
             {"reconstructed_real", part_table(rec.rho.matrix(), false)},
             {"reconstructed_imag", part_table(rec.rho.matrix(), true)},
             {"r_table", r_table},
             {"solved_identity_coefficient", rec.solved_identity},
             {"residual", rec.residual},
             {"min_eigenvalue", rec.min_eigenvalue},
             {"max_entry_error", result.max_entry_error},
             {"settings", settings}};
    if (rho_true.num_qubits() == 1) {
        out["bloch"] = {{"rx", rec.coefficients.at("x")},
                        {"ry", rec.coefficients.at("y")},
                        {"rz", rec.coefficients.at("z")}};
    }
    return out;
}

}  // namespace qndtomo
