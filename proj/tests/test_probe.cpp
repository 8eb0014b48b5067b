#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ramsey/probe.hpp"
#include "ramsey/sampler.hpp"

using namespace ramsey;

namespace {

ProbePulseConfig single_atom(double delta, double t, double gamma, double phase = 0.0) {
    ProbePulseConfig cfg;
    cfg.n_atoms = 1;
    cfg.correlation = Correlation::Uncorrelated;
    cfg.omega0 = delta;
    cfg.omega_ref = 0.0;
    cfg.t_interrogation = t;
    cfg.gamma = gamma;
    cfg.phase_offset = phase;
    return cfg;
}

ProbePulseConfig ghz(int n, double delta, double t, double gamma, double phase = 0.0) {
    ProbePulseConfig cfg = single_atom(delta, t, gamma, phase);
    cfg.n_atoms = n;
    cfg.correlation = Correlation::Ghz;
    return cfg;
}

}  // namespace

TEST_CASE("excited-state probability at reference points") {
    CHECK(p_excited(single_atom(0.0, 1.0, 0.0)) == Catch::Approx(1.0));
    CHECK(p_excited(single_atom(M_PI, 1.0, 0.0)) == Catch::Approx(0.0).margin(1e-15));
    CHECK(p_excited(single_atom(M_PI / 2.0, 1.0, 1.0)) == Catch::Approx(0.5).margin(1e-15));
    // GHZ-3 alias: detuning 2*pi/3 is indistinguishable from 0
    CHECK(p_excited(ghz(3, 2.0 * M_PI / 3.0, 1.0, 0.0)) == Catch::Approx(1.0));
    // even-N block at delta*t = pi/2 with the -pi/2 offset sits at quadrature
    CHECK(p_excited(ghz(2, M_PI / 2.0, 1.0, 0.0, -M_PI / 2.0)) == Catch::Approx(0.5));
}

TEST_CASE("dephased single atom reduces to the broadened fringe") {
    const double delta = 0.7, t = 1.3, gamma = 0.4;
    CHECK(p_excited(single_atom(delta, t, gamma)) ==
          Catch::Approx(0.5 * (1.0 + std::cos(delta * t) * std::exp(-gamma * t))));
    // GHZ with n_atoms = 1 is the same physical probe
    CHECK(p_excited(ghz(1, delta, t, gamma)) == p_excited(single_atom(delta, t, gamma)));
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(p_excited(single_atom(0.0, 0.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(p_excited(single_atom(0.0, -1.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(p_excited(single_atom(0.0, 1.0, -0.1)), std::invalid_argument);
    ProbePulseConfig bad = single_atom(0.0, 1.0, 0.0);
    bad.n_atoms = 0;
    CHECK_THROWS_AS(p_excited(bad), std::invalid_argument);
    bad.n_atoms = 3;  // uncorrelated probes are per-atom
    CHECK_THROWS_AS(p_excited(bad), std::invalid_argument);
}

TEST_CASE("probability bounds, complement, periodicity and contraction") {
    const TrialSeed key{20240817, 1};
    for (int i = 0; i < 500; ++i) {
        const int n = 1 + static_cast<int>(rng::draw_u64(key, 4 * i) % 8);
        const double delta = -6.0 + 12.0 * rng::draw_unit(key, 4 * i + 1);
        const double t = 0.1 + 2.0 * rng::draw_unit(key, 4 * i + 2);
        const double gamma = 1.5 * rng::draw_unit(key, 4 * i + 3);
        auto cfg = ghz(n, delta, t, gamma);

        const double pe = p_excited(cfg);
        REQUIRE(pe >= 0.0);
        REQUIRE(pe <= 1.0);
        // complement is exact by construction
        REQUIRE(pe + p_ground(cfg) == 1.0);

        auto shifted = cfg;
        shifted.omega0 += 2.0 * M_PI / (n * t);
        CHECK(p_excited(shifted) == Catch::Approx(pe).margin(5e-13));

        const double envelope = 0.5 * std::exp(-n * gamma * t);
        CHECK(std::abs(pe - 0.5) <= envelope + 1e-15);
    }
}

TEST_CASE("dephasing contraction is tight at the fringe extrema") {
    auto cfg = ghz(4, 0.0, 0.8, 0.3);  // collective phase 0 -> cos = 1
    CHECK(std::abs(p_excited(cfg) - 0.5) ==
          Catch::Approx(0.5 * std::exp(-4 * 0.3 * 0.8)).epsilon(1e-12));
}
