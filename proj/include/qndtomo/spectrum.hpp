#pragma once

#include "qndtomo/steady_state.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qndtomo {

/// Drive-detuning grid in rad/s: min, min + step, ... up to max inclusive.
struct DetuningGrid {
    double min = 0.0;
    double max = 0.0;
    double step = 0.0;

    void validate() const;
    std::vector<double> points() const;

    /// [lowest shift - 10 kappa, highest shift + 10 kappa] sampled at `count`
    /// points.
    static DetuningGrid around(std::span<const double> shifts, double kappa, int count = 4001);
};

struct SpectrumTrace {
    std::vector<double> detunings;
    /// Steady-state photon number divided by 4 eps^2 / kappa^2.
    std::vector<double> transmission;
    /// Empty-cavity reference on the same grid, when requested.
    std::vector<double> emc;

    CavityDriveParams cavity;
    std::vector<QubitParams> qubits;
    QubitMoments moments;

    /// Equal lengths, strictly increasing detunings, non-negative values.
    void validate() const;
};

/// Evaluates the closed form matching the qubit count at every grid point,
/// normalised by the empty-cavity peak.
SpectrumTrace sweep(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                    const QubitMoments& moments, const DetuningGrid& grid, bool with_emc = false);

struct ShiftTag {
    std::string state;  // "0", "1" or "00" ... "11"
    double position = 0.0;
};

struct PredictedShifts {
    /// Basis order |0..> first.
    std::vector<ShiftTag> tags;
    /// Smallest pairwise distance between positions.
    double min_separation = 0.0;
    /// Set when two positions lie within kappa of each other.
    bool degenerate = false;

    std::vector<double> positions() const;
};

PredictedShifts predicted_shift_positions(std::span<const QubitParams> qubits, double omega_r,
                                          double kappa);

enum class HeightMode { predicted_position, local_maximum };

struct PeakReadout {
    std::vector<double> positions;
    std::vector<double> heights;
    HeightMode mode = HeightMode::predicted_position;
};

/// Reads the trace at each position. predicted_position interpolates
/// linearly; local_maximum takes the nearest grid local maximum within
/// +-kappa and falls back to interpolation. Throws ConfigError for positions
/// outside the grid span.
PeakReadout relative_heights(const SpectrumTrace& trace, std::span<const double> positions,
                             HeightMode mode = HeightMode::predicted_position);

std::string to_string(HeightMode mode);
HeightMode height_mode_from_string(std::string_view name);

/// CSV text: header detuning_mhz,transmission_normalized[,emc_normalized];
/// values in linear MHz with 12 significant digits.
std::string spectrum_csv(const SpectrumTrace& trace);

}  // namespace qndtomo
