#pragma once

#include "qndtomo/spectrum.hpp"
#include "qndtomo/steady_state.hpp"
#include "qndtomo/tomography.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qndtomo::cli {

/// Sectioned key = value text. '#' and ';' start comments. Keys before the
/// first section header belong to the section "".
struct IniEntry {
    std::string value;
    int line = 0;
};

struct IniDocument {
    std::string source;
    std::map<std::string, std::map<std::string, IniEntry>> sections;
    /// Line of each section header.
    std::map<std::string, int> section_lines;

    static IniDocument parse(std::string_view text, std::string source = "config");
};

/// Qubit state request, realised once the qubit count and seed are known.
struct StateSpec {
    enum class Kind { none, basis, bell, populations, bloch, beta, named, density_file, random };
    Kind kind = Kind::none;
    std::string text;
    std::vector<double> values;
    std::filesystem::path path;
};

struct ValidateSpec {
    int draws = 100;
    int lindblad_cases = 2;
    double spread = 0.5;
    double closed_form_tol = 1e-10;
    double lindblad_tol = 1e-6;
    double dephasing_tol = 1e-8;
    double dephasing_rate_mhz = 1.0;
};

struct RunConfig {
    std::string preset;
    CavityDriveParams cavity;
    std::vector<QubitParams> qubits;
    StateSpec state;
    std::optional<DetuningGrid> grid;
    int grid_points = 4001;
    std::vector<std::string> plan;
    bool augment = true;
    HeightMode height_mode = HeightMode::predicted_position;
    ReadoutMode mode = ReadoutMode::ideal;
    std::optional<double> tomo_tolerance;
    std::uint64_t seed = 20240601;
    std::filesystem::path out_dir = ".";
    std::string prefix;
    ValidateSpec validate;
    std::vector<std::string> warnings;

    int num_qubits() const { return static_cast<int>(qubits.size()); }
    DensityMatrix realize_state() const;
    MeasurementPlan measurement_plan() const;
    /// kappa > 0, epsilon > 0, qubit parameters valid. Throws ConfigError.
    void check() const;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
RunConfig preset_config(std::string_view name);

/// Applies document values on top of `base`; unknown sections or keys and
/// malformed values raise ConfigError naming source and line.
RunConfig apply_document(RunConfig base, const IniDocument& doc,
                         const std::filesystem::path& base_dir = ".");

/// Writes via a temporary file in the same directory, then renames.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    bool passed = true;
};

CommandOutput cmd_spectrum(const RunConfig& cfg);
CommandOutput cmd_tomo(const RunConfig& cfg);
CommandOutput cmd_validate(const RunConfig& cfg);

/// Full command-line entry point. Returns 0 ok, 1 config error,
/// 2 numerical or validation failure, 3 degenerate peak positions.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qndtomo::cli
