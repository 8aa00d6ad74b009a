#include "qndtomo/errors.hpp"
#include "qndtomo/steady_state.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace qndtomo;

namespace {

constexpr double kOmegaR = 2.0 * 3.141592653589793 * 6.0e9;

CavityDriveParams cavity(double kappa_mhz, double delta_mhz = 0.0, double eps_mhz = 0.1) {
    return CavityDriveParams{kOmegaR, mhz(kappa_mhz), mhz(eps_mhz), kOmegaR + mhz(delta_mhz)};
}

QubitParams qubit(double shift_mhz, double gamma_mhz = 0.0) {
    return QubitParams::from_dispersive_shift(mhz(shift_mhz), kOmegaR, mhz(gamma_mhz));
}

QubitMoments one(double sz) { return QubitMoments{{sz}, std::nullopt}; }

std::vector<double> random_populations(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& v : p) s += (v = u(rng));
    for (double& v : p) v /= s;
    return p;
}

}  // namespace

TEST_CASE("empty cavity Lorentzian") {
    const CavityDriveParams res = cavity(1.69);
    CHECK(empty_cavity_photons(res) == doctest::Approx(4.0 * res.epsilon * res.epsilon / (res.kappa * res.kappa)));
    const CavityDriveParams half = res.with_detuning(res.kappa / 2.0);
    CHECK(empty_cavity_photons(half) == doctest::Approx(2.0 * res.epsilon * res.epsilon / (res.kappa * res.kappa)));

    // kappa = 2pi 1.69 MHz, eps = 2pi 0.1 MHz, detuning 2pi 1 MHz, substituted by hand.
    const double w = 2.0 * 3.141592653589793 * 1e6;
    const double expected = (0.1 * w) * (0.1 * w) / ((1.0 * w) * (1.0 * w) + (0.845 * w) * (0.845 * w));
    CHECK(empty_cavity_photons(cavity(1.69, 1.0)) == doctest::Approx(expected).epsilon(1e-10));
    CHECK(empty_cavity_photons(cavity(1.69, 1.0)) > 0.0);

    for (double d : {0.3, 1.1, 7.0}) CHECK(empty_cavity_photons(cavity(1.69, d)) == doctest::Approx(empty_cavity_photons(cavity(1.69, -d))).epsilon(1e-10));
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(cavity(0.0).validate(), ConfigError);
    CHECK_THROWS_AS(cavity(1.0, 0.0, -0.1).validate(), ConfigError);
    QubitParams q{kOmegaR, mhz(10.0), 0.0, 0.0};
    CHECK_THROWS_AS(q.dispersive_shift(kOmegaR), ConfigError);
    CHECK_THROWS_AS(QubitParams::from_dispersive_shift(0.0, kOmegaR, 0.0), ConfigError);

    const QubitParams made = qubit(-7.38);
    CHECK(made.dispersive_shift(kOmegaR) == doctest::Approx(mhz(-7.38)).epsilon(1e-12));
    CHECK(std::abs(made.g / made.detuning(kOmegaR)) == doctest::Approx(0.05));
    CHECK_FALSE(dispersivity_warning(made, kOmegaR).has_value());
    const QubitParams strong = QubitParams::from_dispersive_shift(mhz(-7.38), kOmegaR, 0.0, 0.0, 0.3);
    CHECK(dispersivity_warning(strong, kOmegaR).has_value());

    CHECK_THROWS_AS((QubitMoments{{1.2}, std::nullopt}).validate(), ConfigError);
    CHECK_THROWS_AS((QubitMoments{{0.1, 0.2}, std::nullopt}).validate(), ConfigError);
}

TEST_CASE("moments from populations") {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const auto m = QubitMoments::from_populations(p);
    CHECK(m.sz[0] == doctest::Approx(-0.4));
    CHECK(m.sz[1] == doctest::Approx(-0.2));
    CHECK(*m.szsz == doctest::Approx(0.0));
    const std::vector<double> p1{0.3, 0.7};
    CHECK(QubitMoments::from_populations(p1).sz[0] == doctest::Approx(-0.4));
}

TEST_CASE("sigma_z = +1 peaks at +Gamma") {
    CHECK(sigma_z_shift_sign() == 1);
    const QubitParams q = qubit(-7.38);
    const CavityDriveParams at_plus = cavity(1.69, -7.38);
    const CavityDriveParams at_minus = cavity(1.69, 7.38);
    CHECK(single_qubit_photons(at_plus, q, one(1.0)) > 100.0 * single_qubit_photons(at_minus, q, one(1.0)));
    const std::vector<QubitParams> qs{q};
    CHECK(logic_state_shift("0", qs, kOmegaR) == doctest::Approx(mhz(-7.38)));
    CHECK(logic_state_shift("1", qs, kOmegaR) == doctest::Approx(mhz(7.38)));
    const std::vector<QubitParams> two{qubit(-11.11), qubit(-9.11)};
    CHECK(logic_state_shift("00", two, kOmegaR) == doctest::Approx(mhz(-20.22)));
    CHECK(logic_state_shift("01", two, kOmegaR) == doctest::Approx(mhz(-2.0)));
    CHECK(logic_state_shift("10", two, kOmegaR) == doctest::Approx(mhz(2.0)));
    CHECK(logic_state_shift("11", two, kOmegaR) == doctest::Approx(mhz(20.22)));
    CHECK_THROWS_AS(logic_state_shift("0", two, kOmegaR), ConfigError);
}

TEST_CASE("single-qubit closed form examples") {
    const QubitParams q = qubit(-7.38);
    const double gamma = q.dispersive_shift(kOmegaR);
    // sz = -1 puts the full Lorentzian at -Gamma.
    const CavityDriveParams at = cavity(1.69).with_detuning(-gamma);
    CHECK(single_qubit_photons(at, q, one(-1.0)) == doctest::Approx(empty_cavity_peak(at)).epsilon(1e-12));

    // Equal superposition: two half-height peaks.
    for (double s : {1.0, -1.0}) {
        const CavityDriveParams c = cavity(1.69).with_detuning(s * gamma);
        CHECK(single_qubit_photons(c, q, one(0.0)) / empty_cavity_peak(c) == doctest::Approx(0.5).epsilon(0.02));
    }
}

TEST_CASE("closed forms scale as epsilon squared") {
    const std::vector<QubitParams> qs{qubit(-11.11, 0.02), qubit(-9.11, 0.022)};
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const QubitMoments m2 = QubitMoments::from_populations(p);
    for (double d : {-20.0, -3.0, 0.5, 9.0}) {
        const CavityDriveParams a = cavity(1.7, d, 0.1);
        const CavityDriveParams b = cavity(1.7, d, 0.37);
        const double ratio = (0.37 / 0.1) * (0.37 / 0.1);
        CHECK(empty_cavity_photons(b) == doctest::Approx(ratio * empty_cavity_photons(a)).epsilon(1e-13));
        CHECK(single_qubit_photons(b, qs[0], one(0.3)) ==
              doctest::Approx(ratio * single_qubit_photons(a, qs[0], one(0.3))).epsilon(1e-13));
        CHECK(two_qubit_photons(b, qs[0], qs[1], m2) ==
              doctest::Approx(ratio * two_qubit_photons(a, qs[0], qs[1], m2)).epsilon(1e-13));
    }
}

TEST_CASE("two-qubit coefficients rebuild from parameters") {
    const QubitParams q1 = qubit(-11.11, 0.02);
    const QubitParams q2 = qubit(-9.11, 0.022);
    const CavityDriveParams cav = cavity(1.7, 3.0);
    const QubitMoments m{{0.2, -0.4}, 0.1};
    const auto c = TwoQubitCoeffs::build(cav, q1, q2, m);
    const Complex a(-cav.kappa / 2.0, cav.detuning());
    CHECK(std::abs(c.A - a) < 1e-6);
    CHECK(std::abs(c.B[0] - Complex(0.0, q1.dispersive_shift(kOmegaR))) < 1e-6);
    CHECK(std::abs(c.D[1] - (a - q2.gamma1)) < 1e-6);
    CHECK(std::abs(c.E[0] - Complex(q1.gamma1, q1.dispersive_shift(kOmegaR))) < 1e-6);
    CHECK(std::abs(c.F - (a - q1.gamma1 - q2.gamma1)) < 1e-6);
    CHECK(c.G[0] == 0.2);
    CHECK(c.G12 == 0.1);
}

TEST_CASE("moment solver agrees with the closed forms") {
    const std::vector<QubitParams> single{qubit(-7.38, 0.02)};
    for (double d : {-7.38, -2.0, 0.0, 7.38}) {
        const CavityDriveParams c = cavity(1.69, d);
        CHECK(moment_steady_state(SystemKind::empty, c, {}, {}) ==
              doctest::Approx(empty_cavity_photons(c)).epsilon(1e-12));
        CHECK(moment_steady_state(SystemKind::one_qubit, c, single, one(-0.6)) ==
              doctest::Approx(single_qubit_photons(c, single[0], one(-0.6))).epsilon(1e-10));
    }
    const std::vector<QubitParams> pair{qubit(-11.11, 0.02), qubit(-9.11, 0.022)};
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const QubitMoments m = QubitMoments::from_populations(p);
    for (double d : {-20.22, -2.0, 2.0, 20.22, 5.5}) {
        const CavityDriveParams c = cavity(1.7, d);
        CHECK(moment_steady_state(SystemKind::two_qubit, c, pair, m) ==
              doctest::Approx(two_qubit_photons(c, pair[0], pair[1], m)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(moment_steady_state(SystemKind::two_qubit, cavity(1.7), single, one(0.0)), ConfigError);
}

TEST_CASE("moment solver equivalence over random draws") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> f(0.5, 1.5);
    std::uniform_real_distribution<double> sz(-1.0, 1.0);
    double worst1 = 0.0;
    double worst2 = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const double kappa = 1.7 * f(rng);
        const std::vector<QubitParams> qs{qubit(-11.11 * f(rng), 0.02 * f(rng)), qubit(-9.11 * f(rng), 0.022 * f(rng))};
        std::uniform_real_distribution<double> det(-25.0, 25.0);
        const CavityDriveParams c = cavity(kappa, det(rng));
        const QubitMoments m1 = one(sz(rng));
        const std::span<const QubitParams> first(qs.data(), 1);
        const double a1 = single_qubit_photons(c, qs[0], m1);
        const double b1 = moment_steady_state(SystemKind::one_qubit, c, first, m1);
        worst1 = std::max(worst1, std::abs(a1 - b1) / std::abs(b1));
        const QubitMoments m2 = QubitMoments::from_populations(random_populations(rng, 4));
        const double a2 = two_qubit_photons(c, qs[0], qs[1], m2);
        const double b2 = moment_steady_state(SystemKind::two_qubit, c, qs, m2);
        worst2 = std::max(worst2, std::abs(a2 - b2) / std::abs(b2));
    }
    CHECK(worst1 < 1e-10);
    CHECK(worst2 < 1e-10);
}

TEST_CASE("imaginary part of the two-qubit bracket is Re<a>/eps") {
    const std::vector<QubitParams> qs{qubit(-11.11, 0.02), qubit(-9.11, 0.022)};
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const QubitMoments m = QubitMoments::from_populations(p);
    for (double d : {-20.0, -1.0, 4.0}) {
        const CavityDriveParams c = cavity(1.7, d);
        const auto detail = two_qubit_photons_detail(c, qs[0], qs[1], m);
        const auto sol = moment_solve(SystemKind::two_qubit, c, qs, m);
        CHECK(detail.bracket.imag() == doctest::Approx(sol.amplitudes(0).real() / c.epsilon).epsilon(1e-10));
        CHECK(std::isfinite(detail.imag_to_real_ratio));
    }
}

TEST_CASE("Lorentzian mixture identity without qubit decay") {
    const QubitParams q = qubit(-7.38);
    const std::vector<QubitParams> two{qubit(-11.11), qubit(-9.11)};
    const double g = q.dispersive_shift(kOmegaR);
    const double g1 = two[0].dispersive_shift(kOmegaR);
    const double g2 = two[1].dispersive_shift(kOmegaR);
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        const auto p2 = random_populations(rng, 2);
        const auto p4 = random_populations(rng, 4);
        const QubitMoments m1 = QubitMoments::from_populations(p2);
        const QubitMoments m2 = QubitMoments::from_populations(p4);
        // sz = +1 (bit 0) sits at +Gamma.
        const std::vector<double> s1{g, -g};
        const std::vector<double> s2{g1 + g2, g1 - g2, -g1 + g2, -g1 - g2};
        const double peak = empty_cavity_peak(cavity(1.69));
        double worst1 = 0.0;
        double worst2 = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double d = -30.0 + 60.0 * i / 2000.0;
            const CavityDriveParams c1 = cavity(1.69, d);
            const CavityDriveParams c2 = cavity(1.7, d);
            worst1 = std::max(worst1, std::abs(single_qubit_photons(c1, q, m1) - lorentzian_mixture_oracle(c1, s1, p2)));
            worst2 = std::max(worst2, std::abs(two_qubit_photons(c2, two[0], two[1], m2) -
                                               lorentzian_mixture_oracle(c2, s2, p4)));
        }
        CHECK(worst1 < 1e-12 * peak);
        CHECK(worst2 < 1e-12 * peak);
    }
}

TEST_CASE("Lorentzian mixture oracle preconditions") {
    const CavityDriveParams c = cavity(1.69, 0.4);
    const std::vector<double> zero{0.0};
    const std::vector<double> unit{1.0};
    CHECK(lorentzian_mixture_oracle(c, zero, unit) == doctest::Approx(empty_cavity_photons(c)).epsilon(1e-15));
    const std::vector<double> two_shifts{0.0, 1.0};
    const std::vector<double> too_much{0.7, 0.4};
    const std::vector<double> negative{-0.1, 0.4};
    CHECK_THROWS_AS(lorentzian_mixture_oracle(c, two_shifts, too_much), ConfigError);
    CHECK_THROWS_AS(lorentzian_mixture_oracle(c, two_shifts, negative), ConfigError);
    CHECK_THROWS_AS(lorentzian_mixture_oracle(c, two_shifts, unit), ConfigError);
}

TEST_CASE("well separated peaks read back the populations") {
    const std::vector<QubitParams> qs{qubit(-40.0), qubit(-15.0)};
    const std::vector<double> p{0.15, 0.25, 0.35, 0.25};
    const QubitMoments m = QubitMoments::from_populations(p);
    const char* states[] = {"00", "01", "10", "11"};
    for (int k = 0; k < 4; ++k) {
        const CavityDriveParams c = cavity(1.0).with_detuning(logic_state_shift(states[k], qs, kOmegaR));
        CHECK(closed_form_photons(c, qs, m) / empty_cavity_peak(c) == doctest::Approx(p[static_cast<std::size_t>(k)]).epsilon(0.01));
    }
}

TEST_CASE("pathological denominators are reported") {
    const CavityDriveParams c{0.0, 1e-200, 1.0, 0.0};
    const QubitParams q{1e-150, 1e-160, 0.0, 0.0};
    CHECK_THROWS_AS(single_qubit_photons(c, q, one(0.0)), NumericalError);
}
