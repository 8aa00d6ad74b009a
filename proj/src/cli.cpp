#include "qndtomo/cli.hpp"

#include "qndtomo/errors.hpp"
#include "qndtomo/json_io.hpp"
#include "qndtomo/lindblad.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace qndtomo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDefaultOmegaR = 6000.0;  // MHz
constexpr double kDefaultEpsilon = 0.1;    // MHz

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string where(const IniDocument& doc, const IniEntry& e) {
    return doc.source + ":" + std::to_string(e.line) + ": ";
}

double parse_double(const IniDocument& doc, const std::string& key, const IniEntry& e) {
    const std::string& v = e.value;
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(where(doc, e) + "'" + key + "' expects a number, got '" + v + "'");
    return out;
}

long long parse_int(const IniDocument& doc, const std::string& key, const IniEntry& e) {
    const std::string& v = e.value;
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(where(doc, e) + "'" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool parse_bool(const IniDocument& doc, const std::string& key, const IniEntry& e) {
    std::string v = e.value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError(where(doc, e) + "'" + key + "' expects true or false, got '" + e.value + "'");
}

std::vector<double> parse_list(const IniDocument& doc, const std::string& key, const IniEntry& e) {
    std::vector<double> out;
    for (const auto& item : split(e.value, ',')) out.push_back(parse_double(doc, key, {item, e.line}));
    return out;
}

/// Single-qubit example system.
RunConfig single_qubit_system() {
    RunConfig cfg;
    cfg.cavity = {mhz(kDefaultOmegaR), mhz(1.69), mhz(kDefaultEpsilon), mhz(kDefaultOmegaR)};
    cfg.qubits = {QubitParams::from_dispersive_shift(mhz(-7.38), cfg.cavity.omega_r, mhz(0.02))};
    return cfg;
}

/// Two-qubit example system, optionally with the separated couplings.
RunConfig two_qubit_system(bool modified) {
    RunConfig cfg;
    cfg.cavity = {mhz(kDefaultOmegaR), mhz(1.7), mhz(kDefaultEpsilon), mhz(kDefaultOmegaR)};
    const double s1 = modified ? 1.05 * -11.11 : -11.11;
    const double s2 = modified ? 0.85 * -9.11 : -9.11;
    cfg.qubits = {QubitParams::from_dispersive_shift(mhz(s1), cfg.cavity.omega_r, mhz(0.02)),
                  QubitParams::from_dispersive_shift(mhz(s2), cfg.cavity.omega_r, mhz(0.022))};
    return cfg;
}

StateSpec make_state(StateSpec::Kind kind, std::string text = {}, std::vector<double> values = {}) {
    StateSpec s;
    s.kind = kind;
    s.text = std::move(text);
    s.values = std::move(values);
    return s;
}

/// Worked-example matrix made Hermitian by setting rho_34 = conj(rho_43).
ComplexMatrix worked_example_matrix() {
    const Complex i = kI;
    ComplexMatrix m(4, 4);
    m << 0.1, 0.0313 - 0.0313 * i, 0.15 - 0.15 * i, -0.125 * i,
        0.0313 + 0.0313 * i, 0.2, 0.125, -0.15 + 0.15 * i,
        0.15 + 0.15 * i, 0.125, 0.3, -0.0313 - 0.0313 * i,
        0.125 * i, -0.15 - 0.15 * i, -0.0313 + 0.0313 * i, 0.4;
    return m;
}

DensityMatrix random_state(int num_qubits, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index dim = Eigen::Index{1} << num_qubits;
    ComplexMatrix g(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = Complex(normal(rng), normal(rng));
    ComplexMatrix m = g * g.adjoint();
    m /= m.trace().real();
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m));
}

void set_state(RunConfig& cfg, StateSpec spec, const IniDocument& doc, const IniEntry& e,
               bool& state_set) {
    if (state_set) throw ConfigError(where(doc, e) + "more than one state specification in [state]");
    state_set = true;
    cfg.state = std::move(spec);
}

void apply_qubit_section(RunConfig& cfg, const IniDocument& doc, int index,
                         const std::map<std::string, IniEntry>& keys) {
    const auto idx = static_cast<std::size_t>(index);
    if (idx > cfg.qubits.size()) {
        const auto& e = keys.begin()->second;
        throw ConfigError(where(doc, e) + "[qubit" + std::to_string(index + 1) + "] requires [qubit" +
                          std::to_string(index) + "]");
    }
    const bool exists = idx < cfg.qubits.size();
    QubitParams q = exists ? cfg.qubits[idx] : QubitParams{};
    std::optional<double> shift, omega_q, g;
    double ratio = 0.05;
    for (const auto& [key, e] : keys) {
        if (key == "shift_mhz") shift = mhz(parse_double(doc, key, e));
        else if (key == "omega_q_mhz") omega_q = mhz(parse_double(doc, key, e));
        else if (key == "g_mhz") g = mhz(parse_double(doc, key, e));
        else if (key == "gamma1_mhz") q.gamma1 = mhz(parse_double(doc, key, e));
        else if (key == "gamma_phi_mhz") q.gamma_phi = mhz(parse_double(doc, key, e));
        else if (key == "coupling_ratio") ratio = parse_double(doc, key, e);
        else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [qubit" + std::to_string(index + 1) + "]");
    }
    const IniEntry& first = keys.begin()->second;
    if (shift && (omega_q || g))
        throw ConfigError(where(doc, first) + "give either shift_mhz or omega_q_mhz with g_mhz, not both");
    if (shift) {
        q = QubitParams::from_dispersive_shift(*shift, cfg.cavity.omega_r, q.gamma1, q.gamma_phi, ratio);
    } else if (omega_q || g) {
        if (!(omega_q && g) && !exists)
            throw ConfigError(where(doc, first) + "omega_q_mhz and g_mhz must be given together");
        if (omega_q) q.omega_q = *omega_q;
        if (g) q.g = *g;
    } else if (!exists) {
        throw ConfigError(where(doc, first) + "new qubit needs shift_mhz or omega_q_mhz and g_mhz");
    }
    if (exists) cfg.qubits[idx] = q;
    else cfg.qubits.push_back(q);
}

std::string peak_label(const std::string& state) { return state.empty() ? "emc" : state; }

}  // namespace

// --- INI -----------------------------------------------------------------------

IniDocument IniDocument::parse(std::string_view text, std::string source) {
    IniDocument doc;
    doc.source = std::move(source);
    std::string section;
    doc.sections[section];
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        if (const auto c = raw.find_first_of("#;"); c != std::string_view::npos) raw = raw.substr(0, c);
        const std::string line = trim(raw);
        const std::string loc = doc.source + ":" + std::to_string(line_no) + ": ";
        if (!line.empty()) {
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(loc + "unterminated section header");
                section = trim(std::string_view(line).substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError(loc + "empty section name");
                doc.sections[section];
                doc.section_lines.emplace(section, line_no);
            } else {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw ConfigError(loc + "expected 'key = value'");
                const std::string key = trim(std::string_view(line).substr(0, eq));
                const std::string value = trim(std::string_view(line).substr(eq + 1));
                if (key.empty()) throw ConfigError(loc + "missing key before '='");
                auto& keys = doc.sections[section];
                if (keys.count(key)) throw ConfigError(loc + "duplicate key '" + key + "'");
                keys[key] = {value, line_no};
            }
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return doc;
}

// --- presets -------------------------------------------------------------------

std::vector<std::string> preset_names() {
    return {"emc",      "superposition", "bloch",    "pair",     "pair-separated", "bell",    "worked-example",
            "random",   "basis-0",       "basis-1",  "basis-00", "basis-01",       "basis-10", "basis-11"};
}

RunConfig preset_config(std::string_view name) {
    RunConfig cfg;
    if (name == "emc") {
        cfg = single_qubit_system();
        cfg.qubits.clear();
    } else if (name == "superposition") {
        cfg = single_qubit_system();
        cfg.state = make_state(StateSpec::Kind::beta, {}, {0.4});
    } else if (name == "bloch") {
        cfg = single_qubit_system();
        cfg.state = make_state(StateSpec::Kind::bloch, {}, {0.6, 0.5, 0.6});
    } else if (name == "pair" || name == "pair-separated") {
        cfg = two_qubit_system(name == "pair-separated");
        cfg.state = make_state(StateSpec::Kind::populations, {}, {0.1, 0.2, 0.3, 0.4});
    } else if (name == "bell") {
        cfg = two_qubit_system(false);
        cfg.state = make_state(StateSpec::Kind::bell);
    } else if (name == "worked-example") {
        cfg = two_qubit_system(true);
        cfg.state = make_state(StateSpec::Kind::named, "worked-example");
    } else if (name == "random") {
        cfg = two_qubit_system(true);
        cfg.state = make_state(StateSpec::Kind::random);
    } else if (name.starts_with("basis-") && (name.size() == 7 || name.size() == 8)) {
        const std::string bits(name.substr(6));
        if (bits.find_first_not_of("01") != std::string::npos) throw ConfigError("unknown preset '" + std::string(name) + "'");
        cfg = bits.size() == 1 ? single_qubit_system() : two_qubit_system(false);
        cfg.state = make_state(StateSpec::Kind::basis, bits);
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    cfg.preset = std::string(name);
    return cfg;
}

// --- configuration ---------------------------------------------------------------

RunConfig apply_document(RunConfig cfg, const IniDocument& doc, const fs::path& base_dir) {
    for (const auto& [section, keys] : doc.sections) {
        if (section.empty()) {
            for (const auto& [key, e] : keys)
                if (key != "preset") throw ConfigError(where(doc, e) + "unknown top-level key '" + key + "'");
            continue;
        }
        if (section != "system" && section != "qubit1" && section != "qubit2" && section != "state" &&
            section != "grid" && section != "plan" && section != "tomo" && section != "output" &&
            section != "validate") {
            const auto it = doc.section_lines.find(section);
            const int line = it != doc.section_lines.end() ? it->second : (keys.empty() ? 0 : keys.begin()->second.line);
            throw ConfigError(doc.source + ":" + std::to_string(line) + ": unknown section [" + section + "]");
        }
    }

    auto section = [&](const std::string& name) -> const std::map<std::string, IniEntry>* {
        const auto it = doc.sections.find(name);
        return it == doc.sections.end() ? nullptr : &it->second;
    };

    if (const auto* sys = section("system")) {
        if (cfg.cavity.omega_r == 0.0) {
            cfg.cavity.omega_r = mhz(kDefaultOmegaR);
            cfg.cavity.omega_d = cfg.cavity.omega_r;
            cfg.cavity.epsilon = mhz(kDefaultEpsilon);
        }
        for (const auto& [key, e] : *sys) {
            if (key == "kappa_mhz") {
                cfg.cavity.kappa = mhz(parse_double(doc, key, e));
            } else if (key == "epsilon_mhz") {
                cfg.cavity.epsilon = mhz(parse_double(doc, key, e));
            } else if (key == "omega_r_mhz") {
                const double new_r = mhz(parse_double(doc, key, e));
                // Keep each qubit's detuning, hence its dispersive shift.
                for (auto& q : cfg.qubits) q.omega_q += new_r - cfg.cavity.omega_r;
                cfg.cavity.omega_r = new_r;
                cfg.cavity.omega_d = new_r;
            } else if (key == "qubits") {
                const long long n = parse_int(doc, key, e);
                if (n < 0 || n > 2) throw ConfigError(where(doc, e) + "'qubits' must be 0, 1 or 2");
                if (static_cast<std::size_t>(n) > cfg.qubits.size())
                    throw ConfigError(where(doc, e) + "'qubits' can only drop qubits; add [qubitN] sections instead");
                cfg.qubits.resize(static_cast<std::size_t>(n));
            } else {
                throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [system]");
            }
        }
    }
    if (cfg.cavity.omega_r == 0.0) {
        cfg.cavity.omega_r = mhz(kDefaultOmegaR);
        cfg.cavity.omega_d = cfg.cavity.omega_r;
        cfg.cavity.epsilon = mhz(kDefaultEpsilon);
    }
    for (int j = 0; j < 2; ++j)
        if (const auto* qs = section("qubit" + std::to_string(j + 1)); qs && !qs->empty())
            apply_qubit_section(cfg, doc, j, *qs);

    if (const auto* st = section("state")) {
        bool state_set = false;
        for (const auto& [key, e] : *st) {
            using K = StateSpec::Kind;
            if (key == "basis") {
                set_state(cfg, make_state(K::basis, e.value), doc, e, state_set);
            } else if (key == "bell") {
                if (parse_bool(doc, key, e)) set_state(cfg, make_state(K::bell), doc, e, state_set);
            } else if (key == "populations") {
                set_state(cfg, make_state(K::populations, {}, parse_list(doc, key, e)), doc, e, state_set);
            } else if (key == "bloch") {
                set_state(cfg, make_state(K::bloch, {}, parse_list(doc, key, e)), doc, e, state_set);
            } else if (key == "beta1_sq") {
                set_state(cfg, make_state(K::beta, {}, {parse_double(doc, key, e)}), doc, e, state_set);
            } else if (key == "named") {
                set_state(cfg, make_state(K::named, e.value), doc, e, state_set);
            } else if (key == "density_json") {
                StateSpec s = make_state(K::density_file);
                s.path = base_dir / e.value;
                if (!fs::exists(s.path)) throw ConfigError(where(doc, e) + "file not found: " + s.path.string());
                set_state(cfg, std::move(s), doc, e, state_set);
            } else if (key == "random") {
                if (parse_bool(doc, key, e)) set_state(cfg, make_state(K::random), doc, e, state_set);
            } else if (key == "seed") {
                const long long s = parse_int(doc, key, e);
                if (s < 0) throw ConfigError(where(doc, e) + "'seed' must be non-negative");
                cfg.seed = static_cast<std::uint64_t>(s);
            } else {
                throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [state]");
            }
        }
    }

    if (const auto* gr = section("grid")) {
        std::optional<double> lo, hi, step;
        for (const auto& [key, e] : *gr) {
            if (key == "min_mhz") lo = mhz(parse_double(doc, key, e));
            else if (key == "max_mhz") hi = mhz(parse_double(doc, key, e));
            else if (key == "step_mhz") step = mhz(parse_double(doc, key, e));
            else if (key == "points") {
                const long long n = parse_int(doc, key, e);
                if (n < 2 || n > 10'000'000) throw ConfigError(where(doc, e) + "'points' must be in [2, 1e7]");
                cfg.grid_points = static_cast<int>(n);
            } else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [grid]");
        }
        if (lo || hi || step) {
            if (!(lo && hi && step))
                throw ConfigError(doc.source + ":" + std::to_string(gr->begin()->second.line) +
                                  ": [grid] needs all of min_mhz, max_mhz and step_mhz");
            DetuningGrid g{*lo, *hi, *step};
            try {
                g.validate();
            } catch (const ConfigError& ex) {
                throw ConfigError(doc.source + ":" + std::to_string(gr->begin()->second.line) + ": " + ex.what());
            }
            cfg.grid = g;
        }
    }

    if (const auto* pl = section("plan")) {
        for (const auto& [key, e] : *pl) {
            if (key == "settings") cfg.plan = split(e.value, ';');
            else if (key == "augment") cfg.augment = parse_bool(doc, key, e);
            else if (key == "height_mode") {
                try {
                    cfg.height_mode = height_mode_from_string(e.value);
                } catch (const ConfigError& ex) {
                    throw ConfigError(where(doc, e) + ex.what());
                }
            } else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [plan]");
        }
    }

    if (const auto* tm = section("tomo")) {
        for (const auto& [key, e] : *tm) {
            if (key == "mode") {
                try {
                    cfg.mode = readout_mode_from_string(e.value);
                } catch (const ConfigError& ex) {
                    throw ConfigError(where(doc, e) + ex.what());
                }
            } else if (key == "tolerance") {
                cfg.tomo_tolerance = parse_double(doc, key, e);
            } else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [tomo]");
        }
    }

    if (const auto* out = section("output")) {
        for (const auto& [key, e] : *out) {
            if (key == "dir") cfg.out_dir = base_dir / e.value;
            else if (key == "prefix") cfg.prefix = e.value;
            else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [output]");
        }
    }

    if (const auto* va = section("validate")) {
        for (const auto& [key, e] : *va) {
            auto positive = [&](double v) {
                if (!(v > 0.0)) throw ConfigError(where(doc, e) + "'" + key + "' must be positive");
                return v;
            };
            if (key == "draws") {
                const long long n = parse_int(doc, key, e);
                if (n < 1 || n > 1'000'000) throw ConfigError(where(doc, e) + "'draws' must be in [1, 1e6]");
                cfg.validate.draws = static_cast<int>(n);
            } else if (key == "lindblad_cases") {
                const long long n = parse_int(doc, key, e);
                if (n < 0 || n > 100) throw ConfigError(where(doc, e) + "'lindblad_cases' must be in [0, 100]");
                cfg.validate.lindblad_cases = static_cast<int>(n);
            } else if (key == "spread") {
                const double s = parse_double(doc, key, e);
                if (!(s >= 0.0 && s < 1.0)) throw ConfigError(where(doc, e) + "'spread' must be in [0, 1)");
                cfg.validate.spread = s;
            } else if (key == "closed_form_tol") cfg.validate.closed_form_tol = positive(parse_double(doc, key, e));
            else if (key == "lindblad_tol") cfg.validate.lindblad_tol = positive(parse_double(doc, key, e));
            else if (key == "dephasing_tol") cfg.validate.dephasing_tol = positive(parse_double(doc, key, e));
            else if (key == "dephasing_rate_mhz") cfg.validate.dephasing_rate_mhz = positive(parse_double(doc, key, e));
            else throw ConfigError(where(doc, e) + "unknown key '" + key + "' in [validate]");
        }
    }
    return cfg;
}

void RunConfig::check() const {
    cavity.validate();
    if (!(cavity.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (qubits.size() > 2) throw ConfigError("at most two qubits are supported");
    for (const auto& q : qubits) {
        q.validate(cavity.omega_r);
        if (!(q.g > 0.0 || q.g < 0.0)) throw ConfigError("qubit coupling g must be non-zero");
    }
}

DensityMatrix RunConfig::realize_state() const {
    using K = StateSpec::Kind;
    const int n = num_qubits();
    if (n == 0) throw ConfigError("no qubits configured");
    switch (state.kind) {
    case K::none:
        throw ConfigError("no qubit state configured; set one in [state] or choose a preset");
    case K::basis:
        if (static_cast<int>(state.text.size()) != n)
            throw ConfigError("basis state '" + state.text + "' does not match " + std::to_string(n) + " qubit(s)");
        return DensityMatrix::basis_state(state.text);
    case K::bell: {
        if (n != 2) throw ConfigError("the Bell state needs two qubits");
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
        psi(0) = psi(3) = 1.0;
        return DensityMatrix::pure(psi);
    }
    case K::populations: {
        if (static_cast<int>(state.values.size()) != (1 << n))
            throw ConfigError("populations: expected " + std::to_string(1 << n) + " values");
        double sum = 0.0;
        for (double p : state.values) {
            if (p < 0.0) throw ConfigError("populations must be non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("populations must sum to 1");
        ComplexMatrix m = ComplexMatrix::Zero(1 << n, 1 << n);
        for (int k = 0; k < (1 << n); ++k) m(k, k) = state.values[static_cast<std::size_t>(k)];
        return DensityMatrix(std::move(m));
    }
    case K::bloch: {
        if (n != 1) throw ConfigError("a Bloch vector needs one qubit");
        if (state.values.size() != 3) throw ConfigError("bloch: expected three components");
        return BlochVector{state.values[0], state.values[1], state.values[2]}.to_density();
    }
    case K::beta: {
        const double b = state.values.at(0);
        if (n != 1) throw ConfigError("beta1_sq needs one qubit");
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("beta1_sq must lie in [0, 1]");
        Eigen::VectorXcd psi(2);
        psi << std::sqrt(1.0 - b), std::sqrt(b);
        return DensityMatrix::pure(psi);
    }
    case K::named:
        if (state.text == "worked-example") {
            if (n != 2) throw ConfigError("the worked-example state needs two qubits");
            return DensityMatrix(worked_example_matrix());
        }
        if (state.text == "bell") return preset_config("bell").realize_state();
        throw ConfigError("unknown named state '" + state.text + "'");
    case K::density_file: {
        std::ifstream in(state.path);
        if (!in) throw ConfigError("cannot read " + state.path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& ex) {
            throw ConfigError(state.path.string() + ": " + ex.what());
        }
        DensityMatrix rho = density_from_json(j);
        if (rho.num_qubits() != n) throw ConfigError(state.path.string() + ": qubit count differs from the system");
        return rho;
    }
    case K::random:
        return random_state(n, seed);
    }
    throw ConfigError("unsupported state specification");
}

MeasurementPlan RunConfig::measurement_plan() const {
    if (!plan.empty()) return MeasurementPlan::parse(plan, num_qubits());
    return num_qubits() == 1 ? MeasurementPlan::single_qubit() : MeasurementPlan::table_one();
}

void write_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

// --- commands --------------------------------------------------------------------

namespace {

json system_json(const RunConfig& cfg) {
    json qubits = json::array();
    for (const auto& q : cfg.qubits)
        qubits.push_back({{"shift_mhz", to_mhz(q.dispersive_shift(cfg.cavity.omega_r))},
                          {"omega_q_mhz", to_mhz(q.omega_q)},
                          {"g_mhz", to_mhz(q.g)},
                          {"gamma1_mhz", to_mhz(q.gamma1)},
                          {"gamma_phi_mhz", to_mhz(q.gamma_phi)}});
    return {{"omega_r_mhz", to_mhz(cfg.cavity.omega_r)},
            {"kappa_mhz", to_mhz(cfg.cavity.kappa)},
            {"epsilon_mhz", to_mhz(cfg.cavity.epsilon)},
            {"qubits", qubits}};
}

fs::path output_path(const RunConfig& cfg, const std::string& name) { return cfg.out_dir / (cfg.prefix + name); }

/// Randomly perturbed copy of a base value, uniform in (1 +- spread).
double jitter(std::mt19937_64& rng, double base, double spread) {
    std::uniform_real_distribution<double> u(1.0 - spread, 1.0 + spread);
    return base * u(rng);
}

std::vector<double> random_populations(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(count));
    double sum = 0.0;
    for (double& v : p) sum += (v = u(rng) + 1e-3);
    for (double& v : p) v /= sum;
    return p;
}

double relative(double a, double b) {
    const double scale = std::max(std::abs(b), 1e-300);
    return std::abs(a - b) / scale;
}

}  // namespace

CommandOutput cmd_spectrum(const RunConfig& cfg) {
    cfg.check();
    CommandOutput result;
    const int n = cfg.num_qubits();

    QubitMoments moments;
    std::optional<DensityMatrix> rho;
    json peaks = json::array();
    std::vector<double> positions;
    std::vector<std::string> states;
    std::optional<PredictedShifts> shifts;
    if (n > 0) {
        rho = cfg.realize_state();
        moments = moments_from_density(*rho);
        shifts = predicted_shift_positions(cfg.qubits, cfg.cavity.omega_r, cfg.cavity.kappa);
        positions = shifts->positions();
        for (const auto& t : shifts->tags) states.push_back(t.state);
    } else {
        positions = {0.0};
        states = {""};
    }
    const DetuningGrid grid =
        cfg.grid ? *cfg.grid : DetuningGrid::around(positions, cfg.cavity.kappa, cfg.grid_points);
    const SpectrumTrace trace = sweep(cfg.cavity, cfg.qubits, moments, grid, n > 0);
    const PeakReadout readout = relative_heights(trace, positions, cfg.height_mode);

    const std::vector<double> pops = rho ? rho->populations() : std::vector<double>{1.0};
    double sum = 0.0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
        sum += readout.heights[k];
        peaks.push_back({{"state", peak_label(states[k])},
                         {"position_mhz", to_mhz(positions[k])},
                         {"height", readout.heights[k]},
                         {"population", pops[k]}});
    }
    double max_t = 0.0;
    for (double t : trace.transmission) max_t = std::max(max_t, t);

    json report{{"preset", cfg.preset},
                {"system", system_json(cfg)},
                {"height_mode", to_string(cfg.height_mode)},
                {"grid_points", trace.detunings.size()},
                {"peaks", peaks},
                {"height_sum", sum},
                {"max_transmission", max_t}};
    if (shifts) {
        report["degenerate"] = shifts->degenerate;
        report["min_separation_mhz"] = to_mhz(shifts->min_separation);
    }
    if (rho) report["state"] = density_to_json(*rho);

    const fs::path csv = output_path(cfg, "spectrum.csv");
    const fs::path js = output_path(cfg, "peaks.json");
    write_atomic(csv, spectrum_csv(trace));
    write_atomic(js, report.dump(2) + "\n");
    result.files = {csv, js};
    return result;
}

CommandOutput cmd_tomo(const RunConfig& cfg) {
    cfg.check();
    const int n = cfg.num_qubits();
    if (n < 1) throw ConfigError("tomography needs one or two qubits");
    const DensityMatrix rho = cfg.realize_state();

    const MeasurementPlan requested = cfg.measurement_plan();
    const SensitivityMatrix initial = derive_sensitivity(requested);
    json plan_info{{"requested", requested.labels()},
                   {"requested_rank", initial.rank},
                   {"unconstrained", initial.unconstrained},
                   {"null_combinations", initial.null_combinations}};
    MeasurementPlan plan = requested;
    if (!initial.full_rank()) {
        if (!cfg.augment) {
            std::string names;
            for (const auto& u : initial.unconstrained) names += (names.empty() ? "" : ", ") + u;
            throw PlanInsufficientError("measurement plan has rank " + std::to_string(initial.rank) +
                                            "; unconstrained coefficients: " + names,
                                        initial.rank, initial.unconstrained);
        }
        const AugmentedPlan aug = augment_plan(requested);
        plan = aug.plan;
        plan_info["added"] = aug.added;
    } else {
        plan_info["added"] = json::array();
    }
    plan_info["used"] = plan.labels();
    const SensitivityMatrix used = derive_sensitivity(plan);

    const PipelineResult result =
        cfg.mode == ReadoutMode::spectral
            ? spectral_pipeline(rho, cfg.cavity, cfg.qubits, plan, cfg.height_mode, cfg.grid_points)
            : ideal_pipeline(rho, plan);

    json report = report_to_json(result, rho, used);
    report["preset"] = cfg.preset;
    report["seed"] = cfg.seed;
    report["plan"] = plan_info;
    report["system"] = system_json(cfg);

    CommandOutput out;
    std::optional<double> tol = cfg.tomo_tolerance;
    if (!tol && cfg.mode == ReadoutMode::ideal) tol = 1e-10;
    if (tol) {
        out.passed = result.max_entry_error < *tol;
        report["check"] = {{"max_entry_error_tolerance", *tol}, {"passed", out.passed}};
    }
    const fs::path path = output_path(cfg, "tomo_report.json");
    write_atomic(path, report.dump(2) + "\n");
    out.files = {path};
    return out;
}

CommandOutput cmd_validate(const RunConfig& cfg) {
    cfg.check();
    const ValidateSpec& v = cfg.validate;
    std::mt19937_64 rng(cfg.seed);

    // Base parameters: configured qubits, completed from the two-qubit preset.
    const RunConfig fallback = two_qubit_system(false);
    std::vector<double> base_shift;
    std::vector<double> base_gamma;
    for (std::size_t j = 0; j < 2; ++j) {
        const bool have = j < cfg.qubits.size();
        const QubitParams& q = have ? cfg.qubits[j] : fallback.qubits[j];
        const double omega_r = have ? cfg.cavity.omega_r : fallback.cavity.omega_r;
        base_shift.push_back(q.dispersive_shift(omega_r));
        base_gamma.push_back(have ? q.gamma1 : fallback.qubits[j].gamma1);
    }

    json rows = json::array();
    bool all_pass = true;
    auto add_row = [&](const std::string& check, const std::string& system, int draw, double residual,
                       double tol) {
        const bool pass = residual < tol;
        all_pass = all_pass && pass;
        rows.push_back({{"check", check}, {"system", system}, {"draw", draw}, {"residual", residual},
                        {"tolerance", tol}, {"pass", pass}});
        return pass;
    };

    double worst[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < v.draws; ++d) {
        CavityDriveParams cav = cfg.cavity;
        cav.kappa = jitter(rng, cfg.cavity.kappa, v.spread);
        std::vector<QubitParams> qs;
        for (std::size_t j = 0; j < 2; ++j)
            qs.push_back(QubitParams::from_dispersive_shift(jitter(rng, base_shift[j], v.spread), cav.omega_r,
                                                            jitter(rng, base_gamma[j], v.spread)));
        const double reach = std::abs(base_shift[0]) + std::abs(base_shift[1]) + 5.0 * cav.kappa;
        std::uniform_real_distribution<double> det(-reach, reach);
        cav = cav.with_detuning(det(rng));
        const auto p2 = random_populations(rng, 2);
        const auto p4 = random_populations(rng, 4);

        const double e0 = relative(empty_cavity_photons(cav), moment_steady_state(SystemKind::empty, cav, {}, {}));
        const auto m1 = QubitMoments::from_populations(p2);
        const std::span<const QubitParams> one(qs.data(), 1);
        const double e1 = relative(single_qubit_photons(cav, qs[0], m1),
                                   moment_steady_state(SystemKind::one_qubit, cav, one, m1));
        const auto m2 = QubitMoments::from_populations(p4);
        const double e2 = relative(two_qubit_photons(cav, qs[0], qs[1], m2),
                                   moment_steady_state(SystemKind::two_qubit, cav, qs, m2));
        add_row("closed_form_vs_moments", "empty", d, e0, v.closed_form_tol);
        add_row("closed_form_vs_moments", "one_qubit", d, e1, v.closed_form_tol);
        add_row("closed_form_vs_moments", "two_qubit", d, e2, v.closed_form_tol);
        worst[0] = std::max(worst[0], e0);
        worst[1] = std::max(worst[1], e1);
        worst[2] = std::max(worst[2], e2);
    }

    double worst_lindblad = 0.0;
    double worst_dephasing = 0.0;
    EvolveOptions opts;
    opts.scope = ConvergenceScope::qnd_blocks;
    opts.tol = 1e-12;
    for (int c = 0; c < v.lindblad_cases; ++c) {
        for (int n = 0; n <= 2; ++n) {
            CavityDriveParams cav = cfg.cavity;
            std::vector<QubitParams> qs;
            for (int j = 0; j < n; ++j)
                qs.push_back(QubitParams::from_dispersive_shift(base_shift[static_cast<std::size_t>(j)], cav.omega_r, 0.0));
            const double reach = std::abs(base_shift[0]) + std::abs(base_shift[1]) + 2.0 * cav.kappa;
            std::uniform_real_distribution<double> det(-reach, reach);
            cav = cav.with_detuning(det(rng));
            std::optional<DensityMatrix> rho;
            QubitMoments m;
            if (n > 0) {
                rho = random_state(n, rng());
                m = moments_from_density(*rho);
            }
            const FockSpaceConfig fock = auto_fock_space(cav);
            const double closed = closed_form_photons(cav, qs, m);
            const auto lind = lindblad_steady_photons(cav, qs, rho ? &*rho : nullptr, fock, opts);
            const std::string system = n == 0 ? "empty" : n == 1 ? "one_qubit" : "two_qubit";
            const double e = relative(lind.photons, closed);
            add_row("lindblad_vs_closed_form", system, c, e, v.lindblad_tol);
            worst_lindblad = std::max(worst_lindblad, e);

            if (n > 0) {
                for (auto& q : qs) q.gamma_phi = mhz(v.dephasing_rate_mhz);
                const auto deph = lindblad_steady_photons(cav, qs, &*rho, fock, opts);
                const double diff = std::abs(deph.photons - lind.photons);
                add_row("dephasing_immunity", system, c, diff, v.dephasing_tol);
                worst_dephasing = std::max(worst_dephasing, diff);
            }
        }
    }

    json report{{"preset", cfg.preset},
                {"seed", cfg.seed},
                {"draws", v.draws},
                {"lindblad_cases", v.lindblad_cases},
                {"system", system_json(cfg)},
                {"summary",
                 {{"closed_form_vs_moments_max", {{"empty", worst[0]}, {"one_qubit", worst[1]}, {"two_qubit", worst[2]}}},
                  {"lindblad_vs_closed_form_max", worst_lindblad},
                  {"dephasing_immunity_max", worst_dephasing},
                  {"passed", all_pass}}},
                {"rows", rows}};
    CommandOutput out;
    out.passed = all_pass;
    const fs::path path = output_path(cfg, "validate_report.json");
    write_atomic(path, report.dump(2) + "\n");
    out.files = {path};
    return out;
}

// --- entry point -----------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dispersive-readout spectra, tomography and solver validation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::string out_dir;
    std::string mode;
    std::string preset;
    std::optional<long long> seed;
    app.add_option("--config", config_path, "Configuration file");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--mode", mode, "Readout mode for tomo")->check(CLI::IsMember({"ideal", "spectral"}));
    app.add_option("--seed", seed, "Seed for random states and parameter draws");
    app.add_option("--preset", preset, "Named parameter and state preset")->check(CLI::IsMember(preset_names()));
    auto* spectrum = app.add_subcommand("spectrum", "Transmission spectrum CSV and peak readout JSON");
    auto* tomo = app.add_subcommand("tomo", "State reconstruction report");
    auto* validate = app.add_subcommand("validate", "Closed form, moment and master-equation agreement");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        std::optional<IniDocument> doc;
        fs::path base_dir = ".";
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot read config file " + config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            doc = IniDocument::parse(ss.str(), config_path);
            base_dir = fs::path(config_path).parent_path();
            if (base_dir.empty()) base_dir = ".";
        }
        if (preset.empty() && doc) {
            const auto& top = doc->sections.at("");
            if (const auto it = top.find("preset"); it != top.end()) preset = it->second.value;
        }
        if (!preset.empty()) cfg = preset_config(preset);
        if (doc) cfg = apply_document(std::move(cfg), *doc, base_dir);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!mode.empty()) cfg.mode = readout_mode_from_string(mode);
        if (seed) {
            if (*seed < 0) throw ConfigError("--seed must be non-negative");
            cfg.seed = static_cast<std::uint64_t>(*seed);
        }
        if (cfg.cavity.kappa == 0.0 && preset.empty() && !doc)
            throw ConfigError("no system configured; pass --config or --preset");
        for (const auto& q : cfg.qubits)
            if (auto w = dispersivity_warning(q, cfg.cavity.omega_r)) err << "warning: " << *w << "\n";

        CommandOutput result;
        if (spectrum->parsed()) result = cmd_spectrum(cfg);
        else if (tomo->parsed()) result = cmd_tomo(cfg);
        else if (validate->parsed()) result = cmd_validate(cfg);
        for (const auto& f : result.files) out << f.string() << "\n";
        if (!result.passed) {
            err << "error: checks failed; see " << (result.files.empty() ? "report" : result.files.back().string())
                << "\n";
            return 2;
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const DegeneracyError& e) {
        err << "degenerate peaks: " << e.what() << "\n";
        return 3;
    } catch (const PlanInsufficientError& e) {
        err << "plan error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qndtomo::cli
