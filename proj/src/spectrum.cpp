#include "qndtomo/spectrum.hpp"

#include "qndtomo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace qndtomo {

namespace {

std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double interpolate(const SpectrumTrace& trace, double x) {
    const auto& d = trace.detunings;
    const auto it = std::upper_bound(d.begin(), d.end(), x);
    if (it == d.begin()) return trace.transmission.front();
    if (it == d.end()) return trace.transmission.back();
    const auto hi = static_cast<std::size_t>(it - d.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - d[lo]) / (d[hi] - d[lo]);
    return (1.0 - w) * trace.transmission[lo] + w * trace.transmission[hi];
}

std::optional<double> nearest_local_maximum(const SpectrumTrace& trace, double x, double radius) {
    const auto& d = trace.detunings;
    const auto& t = trace.transmission;
    std::optional<double> best;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < d.size(); ++i) {
        const double distance = std::abs(d[i] - x);
        if (distance > radius) continue;
        if (t[i] > 0.0 && t[i] >= t[i - 1] && t[i] >= t[i + 1] && distance < best_distance) {
            best = t[i];
            best_distance = distance;
        }
    }
    return best;
}

}  // namespace

void DetuningGrid::validate() const {
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step))
        throw ConfigError("grid bounds must be finite");
    if (!(step > 0.0)) throw ConfigError("grid step must be positive");
    if (!(max > min)) throw ConfigError("grid max must exceed grid min");
    if ((max - min) / step > 1e7) throw ConfigError("grid has more than 1e7 points");
}

std::vector<double> DetuningGrid::points() const {
    validate();
    const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = min + static_cast<double>(i) * step;
    return out;
}

DetuningGrid DetuningGrid::around(std::span<const double> shifts, double kappa, int count) {
    if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
    if (count < 2) throw ConfigError("grid needs at least two points");
    double lo = 0.0;
    double hi = 0.0;
    if (!shifts.empty()) {
        lo = *std::min_element(shifts.begin(), shifts.end());
        hi = *std::max_element(shifts.begin(), shifts.end());
    }
    DetuningGrid g;
    g.min = lo - 10.0 * kappa;
    g.max = hi + 10.0 * kappa;
    g.step = (g.max - g.min) / (count - 1);
    return g;
}

void SpectrumTrace::validate() const {
    if (detunings.size() != transmission.size())
        throw ConfigError("SpectrumTrace: detuning and transmission lengths differ");
    if (!emc.empty() && emc.size() != detunings.size())
        throw ConfigError("SpectrumTrace: reference column length differs");
    for (std::size_t i = 1; i < detunings.size(); ++i)
        if (!(detunings[i] > detunings[i - 1]))
            throw ConfigError("SpectrumTrace: detunings must be strictly increasing");
    for (double t : transmission)
        if (!(t >= 0.0)) throw NumericalError("SpectrumTrace: negative or NaN transmission");
}

SpectrumTrace sweep(const CavityDriveParams& cav, std::span<const QubitParams> qubits,
                    const QubitMoments& moments, const DetuningGrid& grid, bool with_emc) {
    cav.validate();
    if (moments.num_qubits() != qubits.size())
        throw ConfigError("sweep: moments do not match the number of qubits");
    SpectrumTrace trace;
    trace.cavity = cav;
    trace.qubits.assign(qubits.begin(), qubits.end());
    trace.moments = moments;
    trace.detunings = grid.points();
    const double norm = empty_cavity_peak(cav);
    if (!(norm > 0.0)) throw ConfigError("sweep: epsilon must be positive for a normalised trace");
    trace.transmission.reserve(trace.detunings.size());
    for (double delta : trace.detunings) {
        const CavityDriveParams at = cav.with_detuning(delta);
        trace.transmission.push_back(closed_form_photons(at, qubits, moments) / norm);
        if (with_emc) trace.emc.push_back(empty_cavity_photons(at) / norm);
    }
    trace.validate();
    return trace;
}

std::vector<double> PredictedShifts::positions() const {
    std::vector<double> out;
    out.reserve(tags.size());
    for (const auto& t : tags) out.push_back(t.position);
    return out;
}

PredictedShifts predicted_shift_positions(std::span<const QubitParams> qubits, double omega_r,
                                          double kappa) {
    if (qubits.empty() || qubits.size() > 2)
        throw ConfigError("predicted_shift_positions: 1 or 2 qubits");
    PredictedShifts out;
    const std::size_t n = qubits.size();
    for (std::size_t idx = 0; idx < (std::size_t{1} << n); ++idx) {
        std::string bits;
        for (std::size_t j = 0; j < n; ++j) bits.push_back((idx >> (n - 1 - j)) & 1U ? '1' : '0');
        out.tags.push_back({bits, logic_state_shift(bits, qubits, omega_r)});
    }
    out.min_separation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.tags.size(); ++i)
        for (std::size_t j = i + 1; j < out.tags.size(); ++j)
            out.min_separation =
                std::min(out.min_separation, std::abs(out.tags[i].position - out.tags[j].position));
    out.degenerate = out.min_separation <= kappa;
    return out;
}

PeakReadout relative_heights(const SpectrumTrace& trace, std::span<const double> positions,
                             HeightMode mode) {
    trace.validate();
    if (trace.detunings.empty()) throw ConfigError("relative_heights: empty trace");
    PeakReadout out;
    out.mode = mode;
    const double lo = trace.detunings.front();
    const double hi = trace.detunings.back();
    for (double x : positions) {
        if (x < lo || x > hi)
            throw ConfigError("relative_heights: position " + format_g12(to_mhz(x)) +
                              " MHz lies outside the grid span");
        double h = interpolate(trace, x);
        if (mode == HeightMode::local_maximum) {
            if (auto peak = nearest_local_maximum(trace, x, trace.cavity.kappa)) h = *peak;
        }
        out.positions.push_back(x);
        out.heights.push_back(h);
    }
    return out;
}

std::string to_string(HeightMode mode) {
    return mode == HeightMode::local_maximum ? "local-maximum" : "predicted-position";
}

HeightMode height_mode_from_string(std::string_view name) {
    if (name == "predicted-position") return HeightMode::predicted_position;
    if (name == "local-maximum") return HeightMode::local_maximum;
    throw ConfigError("unknown height mode '" + std::string(name) + "'");
}

std::string spectrum_csv(const SpectrumTrace& trace) {
    trace.validate();
    const bool emc = !trace.emc.empty();
    std::string out = emc ? "detuning_mhz,transmission_normalized,emc_normalized\n"
                          : "detuning_mhz,transmission_normalized\n";
    for (std::size_t i = 0; i < trace.detunings.size(); ++i) {
        out += format_g12(to_mhz(trace.detunings[i]));
        out += ',';
        out += format_g12(trace.transmission[i]);
        if (emc) {
            out += ',';
            out += format_g12(trace.emc[i]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace qndtomo
