#include "qndtomo/errors.hpp"
#include "qndtomo/gates.hpp"
#include "qndtomo/lindblad.hpp"
#include "qndtomo/spectrum.hpp"
#include "qndtomo/steady_state.hpp"
#include "qndtomo/tomography.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace qndtomo;

namespace {

constexpr double kOmegaR = 2.0 * 3.141592653589793 * 6.0e9;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

CavityDriveParams cavity(double kappa_mhz, double eps_mhz = 0.1) {
    return CavityDriveParams{kOmegaR, mhz(kappa_mhz), mhz(eps_mhz), kOmegaR};
}

QubitParams qubit(double shift_mhz, double gamma_mhz, double gamma_phi_mhz = 0.0) {
    return QubitParams::from_dispersive_shift(mhz(shift_mhz), kOmegaR, mhz(gamma_mhz), mhz(gamma_phi_mhz));
}

std::vector<double> heights_at_predicted(const CavityDriveParams& cav, const std::vector<QubitParams>& qs,
                                         const QubitMoments& m) {
    const auto pos = predicted_shift_positions(qs, cav.omega_r, cav.kappa).positions();
    const SpectrumTrace t = sweep(cav, qs, m, DetuningGrid::around(pos, cav.kappa));
    return relative_heights(t, pos).heights;
}

std::string list(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + ")";
}

Outcome criterion_1() {
    const auto t0 = Clock::now();
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> printed{0.1, 0.212, 0.308, 0.4};
    const auto h = heights_at_predicted(cavity(1.7), {qubit(-11.11, 0.02), qubit(-9.11, 0.022)},
                                        QubitMoments::from_populations(p));
    const double elapsed = seconds_since(t0);
    bool ok = elapsed < 1.0;
    std::string worst;
    for (std::size_t k = 0; k < 4; ++k) {
        if (std::abs(h[k] - printed[k]) > 0.005) {
            ok = false;
            worst += " slot " + std::to_string(k) + " off by " + fmt(h[k] - printed[k], 3) + ";";
        }
    }
    return {ok, "heights " + list(h) + " vs " + list(printed) + " +-0.005," + worst + " runtime " + fmt(elapsed, 3) + " s"};
}

Outcome criterion_2() {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const auto h = heights_at_predicted(cavity(1.7), {qubit(-11.11 * 1.05, 0.02), qubit(-9.11 * 0.85, 0.022)},
                                        QubitMoments::from_populations(p));
    double worst = 0.0;
    for (std::size_t k = 0; k < 4; ++k) worst = std::max(worst, std::abs(h[k] - p[k]));
    return {worst <= 0.01, "heights " + list(h) + ", max deviation " + fmt(worst, 3) + " (limit 0.01)"};
}

Outcome criterion_3() {
    const CavityDriveParams c = cavity(1.69);
    const std::vector<QubitParams> qs{qubit(-7.38, 0.02)};
    const auto pos = predicted_shift_positions(qs, c.omega_r, c.kappa).positions();
    bool ok = true;
    std::string detail;
    for (double b : {0.0, 0.2, 0.4, 0.5, 1.0}) {
        const QubitMoments m{{1.0 - 2.0 * b}, {}};
        const SpectrumTrace t = sweep(c, qs, m, DetuningGrid::around(pos, c.kappa));
        const auto h = relative_heights(t, pos).heights;
        const bool pair_ok = std::abs(h[0] - (1.0 - b)) <= 0.02 && std::abs(h[1] - b) <= 0.02;
        ok = ok && pair_ok;
        detail += "beta^2=" + fmt(b, 2) + " " + list(h) + (pair_ok ? "" : " FAIL") + "; ";
        if (b == 0.0 || b == 1.0) {
            const double top = *std::max_element(t.transmission.begin(), t.transmission.end());
            const bool top_ok = std::abs(top - 1.0) <= 0.02;
            ok = ok && top_ok;
            detail += "peak " + fmt(top) + (top_ok ? "" : " FAIL") + "; ";
        }
    }
    return {ok, detail + "limit 0.02"};
}

Outcome criterion_4() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> spread(0.5, 1.5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_moment = 0.0;
    for (int d = 0; d < 100; ++d) {
        const CavityDriveParams base = cavity(1.7 * spread(rng));
        const std::vector<QubitParams> qs{qubit(-11.11 * spread(rng), 0.02 * spread(rng)),
                                          qubit(-9.11 * spread(rng), 0.022 * spread(rng))};
        std::vector<double> p(4);
        for (double& x : p) x = unit(rng);
        double s = 0.0;
        for (double x : p) s += x;
        for (double& x : p) x /= s;
        const QubitMoments m2 = QubitMoments::from_populations(p);
        const QubitMoments m1{{m2.sz[0]}, {}};
        const double reach = 25.0 * base.kappa + std::abs(qs[0].dispersive_shift(kOmegaR)) * 3.0;
        const CavityDriveParams c = base.with_detuning(reach * (2.0 * unit(rng) - 1.0));
        const std::vector<QubitParams> one{qs[0]};
        const double pairs[3][2] = {
            {closed_form_photons(c, {}, QubitMoments{}), moment_steady_state(SystemKind::empty, c, {}, QubitMoments{})},
            {closed_form_photons(c, one, m1), moment_steady_state(SystemKind::one_qubit, c, one, m1)},
            {closed_form_photons(c, qs, m2), moment_steady_state(SystemKind::two_qubit, c, qs, m2)}};
        for (const auto& pr : pairs) worst_moment = std::max(worst_moment, std::abs(pr[0] - pr[1]) / std::abs(pr[0]));
    }

    EvolveOptions opt;
    opt.scope = ConvergenceScope::qnd_blocks;
    opt.tol = 1e-12;
    double worst_lindblad = 0.0;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int d = 0; d < 3; ++d) {
        const CavityDriveParams c = cavity(1.7 * spread(rng)).with_detuning(mhz(-20.0 + 20.0 * d));
        const std::vector<QubitParams> qs{qubit(-11.11 * spread(rng), 0.0, 0.0), qubit(-9.11 * spread(rng), 0.0, 0.0)};
        for (int n = 0; n <= 2; ++n) {
            const std::vector<QubitParams> sub(qs.begin(), qs.begin() + n);
            std::optional<DensityMatrix> rho;
            QubitMoments m;
            if (n > 0) {
                Eigen::VectorXcd psi(1 << n);
                for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(normal(rng), normal(rng));
                rho = DensityMatrix::pure(psi);
                m = moments_from_density(*rho);
            }
            const double closed = closed_form_photons(c, sub, m);
            const auto r = lindblad_steady_photons(c, sub, rho ? &*rho : nullptr, auto_fock_space(c), opt);
            worst_lindblad = std::max(worst_lindblad, std::abs(r.photons - closed) / closed);
        }
    }
    const double elapsed = seconds_since(t0);
    const bool ok = worst_moment < 1e-10 && worst_lindblad < 1e-6 && elapsed < 120.0;
    return {ok, "closed vs moment max rel " + fmt(worst_moment, 3) + " (limit 1e-10), closed vs master equation max rel " +
                    fmt(worst_lindblad, 3) + " (limit 1e-6), runtime " + fmt(elapsed, 3) + " s"};
}

/// Diagonal rows after U_FF U_x1 as signed label sums over 4.
const std::vector<std::map<std::string, int>> kRowsAfterFFx = {
    {{"00", 1}, {"xy", 1}, {"yz", -1}, {"zx", 1}},
    {{"00", 1}, {"xy", 1}, {"yz", 1}, {"zx", -1}},
    {{"00", 1}, {"xy", -1}, {"yz", 1}, {"zx", 1}},
    {{"00", 1}, {"xy", -1}, {"yz", -1}, {"zx", -1}},
};

Outcome criterion_5() {
    const MeasurementPlan plan = MeasurementPlan::parse({"UFF*Ux1"}, 2);
    const SensitivityMatrix s = derive_sensitivity(plan);
    bool ok = s.matrix.rows() == 4;
    double worst = 0.0;
    for (Eigen::Index r = 0; ok && r < 4; ++r) {
        for (std::size_t c = 0; c < s.columns.size(); ++c) {
            const double v = 4.0 * s.matrix(r, static_cast<Eigen::Index>(c));
            const auto& row = kRowsAfterFFx[static_cast<std::size_t>(r)];
            const auto it = row.find(s.columns[c].str());
            const double expected = it == row.end() ? 0.0 : it->second;
            worst = std::max(worst, std::abs(v - expected));
        }
    }
    ok = ok && worst < 1e-12;
    return {ok, "4 rows, max deviation from the integer coefficients " + fmt(worst, 3)};
}

Outcome criterion_6() {
    const SensitivityMatrix s = derive_sensitivity(MeasurementPlan::table_one());
    std::string detail = "rank " + std::to_string(s.rank);
    if (s.full_rank()) return {true, detail + ", reconstruction proceeds with the six settings"};
    std::string names;
    for (const auto& u : s.unconstrained) names += (names.empty() ? "" : ", ") + u;
    std::string nulls;
    for (const auto& n : s.null_combinations) nulls += (nulls.empty() ? "" : "; ") + n;
    const AugmentedPlan a = augment_plan(MeasurementPlan::table_one());
    std::string added;
    for (const auto& x : a.added) added += (added.empty() ? "" : ", ") + x;
    const bool ok = !s.unconstrained.empty() && a.final_rank == 16;
    return {ok, detail + ", unconstrained {" + names + "}, null space {" + nulls + "}, augmented with {" + added +
                    "} to rank " + std::to_string(a.final_rank)};
}

Outcome criterion_7() {
    const Complex i = kI;
    ComplexMatrix m(4, 4);
    m << 0.1, 0.0313 - 0.0313 * i, 0.15 - 0.15 * i, -0.125 * i,
        0.0313 + 0.0313 * i, 0.2, 0.125, -0.15 + 0.15 * i,
        0.15 + 0.15 * i, 0.125, 0.3, -0.0313 - 0.0313 * i,
        0.125 * i, -0.15 - 0.15 * i, -0.0313 + 0.0313 * i, 0.4;
    const std::map<std::string, double> printed_r{
        {"00", 1.0}, {"0x", 0.0}, {"0y", 0.0}, {"0z", -0.2}, {"x0", 0.0}, {"xx", 0.25}, {"xy", 0.0}, {"xz", 0.6},
        {"y0", 0.0}, {"yx", 0.0}, {"yy", -0.25}, {"yz", 0.0}, {"z0", -0.4}, {"zx", 0.125}, {"zy", 0.0}, {"zz", 0.0}};
    const MeasurementPlan plan = augment_plan(MeasurementPlan::table_one()).plan;
    const DensityMatrix rho(m);
    const Reconstruction r = reconstruct_two(simulate_ideal_readout(plan, rho), plan);

    double worst_entry = 0.0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) worst_entry = std::max(worst_entry, std::abs(r.rho(a, b) - m(a, b)));
    const bool entries_ok = worst_entry < 1e-3;

    std::string mismatched;
    for (const auto& [label, v] : printed_r) {
        const double got = r.coefficients.at(label);
        if (std::abs(got - v) > 1e-10) mismatched += " " + label + "=" + fmt(got) + " vs " + fmt(v) + ";";
    }
    const bool r_ok = mismatched.empty();
    return {entries_ok && r_ok, std::string("entries max error ") + fmt(worst_entry, 3) + (entries_ok ? " ok" : " FAIL") +
                                    "; r values" + (r_ok ? " ok" : " differ at 1e-10:" + mismatched)};
}

Outcome criterion_8() {
    const DensityMatrix rho = BlochVector{0.6, 0.5, 0.6}.to_density();
    const auto r = reconstruct_single(simulate_ideal_readout(MeasurementPlan::single_qubit(), rho));
    ComplexMatrix expected(2, 2);
    expected << 0.8, Complex(0.3, -0.25), Complex(0.3, 0.25), 0.2;
    const double err = max_abs_diff(r.rho.matrix(), expected);
    return {err < 1e-14, "max entry error " + fmt(err, 3)};
}

Outcome criterion_9() {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_density = [&](Eigen::Index dim) {
        ComplexMatrix g(dim, dim);
        for (Eigen::Index a = 0; a < dim; ++a)
            for (Eigen::Index b = 0; b < dim; ++b) g(a, b) = Complex(normal(rng), normal(rng));
        ComplexMatrix h = g * g.adjoint();
        h /= h.trace().real();
        return DensityMatrix(ComplexMatrix(0.5 * (h + h.adjoint())));
    };
    const MeasurementPlan two = augment_plan(MeasurementPlan::table_one()).plan;
    const MeasurementPlan one = MeasurementPlan::single_qubit();
    double worst_rt = 0.0;
    for (int t = 0; t < 200; ++t) {
        const DensityMatrix a = random_density(2);
        worst_rt = std::max(worst_rt, max_abs_diff(reconstruct_single(simulate_ideal_readout(one, a)).rho.matrix(), a.matrix()));
        const DensityMatrix b = random_density(4);
        worst_rt = std::max(worst_rt, max_abs_diff(reconstruct_two(simulate_ideal_readout(two, b), two).rho.matrix(), b.matrix()));
    }

    // Lorentzian mixture at zero qubit decay on a 2001-point grid.
    const CavityDriveParams base = cavity(1.7);
    const std::vector<QubitParams> qs{qubit(-11.11, 0.0), qubit(-9.11, 0.0)};
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const QubitMoments m = QubitMoments::from_populations(p);
    std::vector<double> shifts;
    for (const char* bits : {"00", "01", "10", "11"}) shifts.push_back(logic_state_shift(bits, qs, kOmegaR));
    double worst_mix = 0.0;
    const double peak = empty_cavity_peak(base);
    for (int k = 0; k < 2001; ++k) {
        const double d = mhz(-40.0 + 80.0 * k / 2000.0);
        const CavityDriveParams c = base.with_detuning(d);
        worst_mix = std::max(worst_mix, std::abs(two_qubit_photons(c, qs[0], qs[1], m) -
                                                 lorentzian_mixture_oracle(c, shifts, p)) / peak);
    }

    double worst_unitary = 0.0;
    for (GateKind k : {GateKind::Ux, GateKind::Uy, GateKind::Uz})
        for (int q = 1; q <= 2; ++q) worst_unitary = std::max(worst_unitary, unitarity_error(make_gate(k, q, 2).matrix));
    worst_unitary = std::max(worst_unitary, unitarity_error(make_gate(GateKind::UFF, 0, 2).matrix));
    const PhaseComparison y = verify_y_decomposition();

    const bool ok = worst_rt < 1e-10 && worst_mix < 1e-12 && worst_unitary < 1e-12 && y.residual < 1e-12;
    return {ok, "round trip " + fmt(worst_rt, 3) + ", mixture identity " + fmt(worst_mix, 3) + ", unitarity " +
                    fmt(worst_unitary, 3) + ", U_y decomposition residual " + fmt(y.residual, 3) + " at phase " +
                    fmt(y.phase, 3)};
}

Outcome criterion_10() {
    EvolveOptions opt;
    opt.scope = ConvergenceScope::qnd_blocks;
    opt.tol = 1e-12;
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst_steady = 0.0;
    double worst_transient = 0.0;
    for (int n = 1; n <= 2; ++n) {
        Eigen::VectorXcd psi(1 << n);
        for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(normal(rng), normal(rng));
        const DensityMatrix rho = DensityMatrix::pure(psi);
        for (double d : {-9.0, 2.0}) {
            const CavityDriveParams c = cavity(1.7).with_detuning(mhz(d));
            const FockSpaceConfig fock = auto_fock_space(c);
            // Steady state without relaxation.
            std::vector<QubitParams> clean{qubit(-11.11, 0.0), qubit(-9.11, 0.0)};
            clean.resize(static_cast<std::size_t>(n));
            const double reference = lindblad_steady_photons(c, clean, &rho, fock, opt).photons;
            // Trajectory with the relaxation rates of the two-qubit example.
            std::vector<QubitParams> decaying{qubit(-11.11, 0.02), qubit(-9.11, 0.022)};
            decaying.resize(static_cast<std::size_t>(n));
            const double horizon = 20.0 / c.kappa;
            const ComplexMatrix rho0 = vacuum_with_qubits(&rho, fock);
            const double traj = photon_number(evolve_for(build_dispersive_model(c, decaying, fock), rho0, horizon).rho, fock);
            for (double rate : {0.1, 1.0}) {
                std::vector<QubitParams> dephased = clean;
                for (auto& q : dephased) q.gamma_phi = mhz(rate);
                worst_steady = std::max(worst_steady,
                                        std::abs(lindblad_steady_photons(c, dephased, &rho, fock, opt).photons - reference));
                std::vector<QubitParams> both = decaying;
                for (auto& q : both) q.gamma_phi = mhz(rate);
                const double v = photon_number(evolve_for(build_dispersive_model(c, both, fock), rho0, horizon).rho, fock);
                worst_transient = std::max(worst_transient, std::abs(v - traj));
            }
        }
    }
    const bool ok = worst_steady < 1e-8 && worst_transient < 1e-8;
    return {ok, "max photon-number change: steady state " + fmt(worst_steady, 3) + ", trajectory with relaxation " +
                    fmt(worst_transient, 3) + " (limit 1e-8)"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                         criterion_5, criterion_6, criterion_7, criterion_8,
                                                         criterion_9, criterion_10};
    int failures = 0;
    for (int n = 1; n <= 10; ++n) {
        if (only != 0 && n != only) continue;
        Outcome o;
        try {
            o = criteria[static_cast<std::size_t>(n - 1)]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
