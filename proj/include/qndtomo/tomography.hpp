#pragma once

#include "qndtomo/gates.hpp"
#include "qndtomo/linalg.hpp"
#include "qndtomo/spectrum.hpp"
#include "qndtomo/steady_state.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace qndtomo {

/// Single-qubit Bloch components r_i = Tr[rho sigma_i];
/// rho = (I + rx sigma_x + ry sigma_y + rz sigma_z) / 2.
struct BlochVector {
    double rx = 0.0;
    double ry = 0.0;
    double rz = 0.0;

    double norm() const;
    static BlochVector from_density(const DensityMatrix& rho);
    DensityMatrix to_density() const;
};

/// The 4^n real coefficients r_P = Tr[rho P], indexed by PauliLabel::index().
struct PauliCoefficients {
    int num_qubits = 2;
    std::vector<double> values;

    double operator[](const PauliLabel& label) const;
    double at(std::string_view label) const { return (*this)[PauliLabel::parse(label)]; }

    static PauliCoefficients from_density(const DensityMatrix& rho);
    static PauliCoefficients from_map(const std::map<PauliLabel, double>& r, int num_qubits);
    std::map<PauliLabel, double> to_map() const;
    /// sum_P r_P P / 2^n
    ComplexMatrix assemble() const;
};

/// <sigma_zj> and <sigma_z1 sigma_z2> of a state.
QubitMoments moments_from_density(const DensityMatrix& rho);

struct ZRow {
    double r00 = 0.0;
    double r0z = 0.0;
    double rz0 = 0.0;
    double rzz = 0.0;
};

/// Signed population sums giving r_00, r_0z, r_z0, r_zz from the diagonal
/// (p_00, p_01, p_10, p_11). Throws ConfigError for populations below -0.05
/// or a sum more than 0.1 away from 1.
ZRow zrow_from_populations(std::span<const double> p);

/// Gate sequences applied before the diagonal readout.
class MeasurementPlan {
public:
    MeasurementPlan(int num_qubits, std::vector<GateSequence> settings);

    /// identity, UFF*Ux1, UFF*Uy1, UFF*Uz1, Uy1*Uz1*UFF, Uy2*Uz2*UFF.
    static MeasurementPlan table_one();
    /// identity, Ux1, Uy1.
    static MeasurementPlan single_qubit();
    static MeasurementPlan parse(const std::vector<std::string>& settings, int num_qubits);

    int num_qubits() const { return num_qubits_; }
    const std::vector<GateSequence>& settings() const { return settings_; }
    std::size_t size() const { return settings_.size(); }
    std::vector<std::string> labels() const;

private:
    int num_qubits_;
    std::vector<GateSequence> settings_;
};

/// Exact linear map from Pauli coefficients to readout diagonals:
/// p_{s,k} = sum_P matrix(s * 2^n + k, P) r_P.
struct SensitivityMatrix {
    int num_qubits = 2;
    RealMatrix matrix;
    /// "UFF*Ux1|01" style names, one per row.
    std::vector<std::string> row_names;
    std::vector<PauliLabel> columns;
    int rank = 0;
    /// Labels with a component in the null space.
    std::vector<std::string> unconstrained;
    /// Null-space basis in reduced row-echelon form, e.g. "0x" or "xy - yx".
    std::vector<std::string> null_combinations;

    bool full_rank() const { return rank == static_cast<int>(columns.size()); }
};

/// Brute force: for every setting W and label P, diag(W P W^dagger) / 2^n.
SensitivityMatrix derive_sensitivity(const MeasurementPlan& plan);

struct AugmentedPlan {
    MeasurementPlan plan;
    std::vector<std::string> added;
    int initial_rank = 0;
    int final_rank = 0;
};

/// Greedily appends gate products of length 1 to 3 over the single-qubit
/// quarter turns (and UFF for two qubits) until the plan has full rank.
/// Candidates are visited in a fixed order; the first one with the largest
/// rank gain wins.
AugmentedPlan augment_plan(const MeasurementPlan& plan);

/// Diagonals of W rho W^dagger for every setting.
std::vector<std::vector<double>> simulate_ideal_readout(const MeasurementPlan& plan,
                                                        const DensityMatrix& rho);

struct Reconstruction {
    /// Solved coefficients with the identity term replaced by 1.
    PauliCoefficients coefficients;
    /// Least-squares value of the identity coefficient before replacement.
    double solved_identity = 1.0;
    DensityMatrix rho{identity(2) / 2.0};
    /// Euclidean norm of the least-squares residual.
    double residual = 0.0;
    int rank = 0;
    double min_eigenvalue = 0.0;
};

/// Least-squares solve of the sensitivity system. Throws
/// PlanInsufficientError when the plan is rank deficient and ConfigError for
/// malformed readouts.
Reconstruction reconstruct(const std::vector<std::vector<double>>& readouts,
                           const MeasurementPlan& plan);
Reconstruction reconstruct_two(const std::vector<std::vector<double>>& readouts,
                               const MeasurementPlan& plan = MeasurementPlan::table_one());

struct SingleQubitReconstruction {
    BlochVector bloch;
    DensityMatrix rho{identity(2) / 2.0};
    Reconstruction detail;
};

/// Population pairs for the identity, Ux1 and Uy1 settings; the component
/// signs come from the derived sensitivity rows.
SingleQubitReconstruction reconstruct_single(
    const std::vector<std::vector<double>>& readouts,
    const MeasurementPlan& plan = MeasurementPlan::single_qubit());

enum class ReadoutMode { ideal, spectral };
std::string to_string(ReadoutMode mode);
ReadoutMode readout_mode_from_string(std::string_view name);

struct SettingReadout {
    std::string setting;
    std::vector<std::string> states;
    std::vector<double> positions;
    /// Heights read from the trace (spectral) or exact diagonals (ideal).
    std::vector<double> heights;
    double height_sum = 0.0;
    /// Clipped and renormalised heights fed to the solver.
    std::vector<double> populations;
};

struct PipelineResult {
    ReadoutMode mode = ReadoutMode::ideal;
    std::vector<SettingReadout> settings;
    Reconstruction reconstruction;
    /// max |rho_rec - rho_true| over matrix entries.
    double max_entry_error = 0.0;
};

/// Rotates, sweeps, reads peak heights at the predicted shifts, clips to
/// [0, 1], renormalises per setting and reconstructs. Throws DegeneracyError
/// when two logic-state peaks lie within kappa.
PipelineResult spectral_pipeline(const DensityMatrix& rho_true, const CavityDriveParams& cav,
                                 std::span<const QubitParams> qubits, const MeasurementPlan& plan,
                                 HeightMode mode = HeightMode::predicted_position,
                                 int grid_points = 4001);

/// Same report structure from exact diagonals.
PipelineResult ideal_pipeline(const DensityMatrix& rho_true, const MeasurementPlan& plan);

/// True and reconstructed matrices, real and imaginary tables, r-tables,
/// per-setting heights, residual, rank and minimum eigenvalue.
nlohmann::json report_to_json(const PipelineResult& result, const DensityMatrix& rho_true,
                              const SensitivityMatrix& sensitivity);

}  // namespace qndtomo
