#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ramsey/schemes.hpp"
#include "oracles.hpp"

using namespace ramsey;

namespace {

double ladder_exact_std(int p_levels, double nu, double t) {
    // Gaussian width of the quadrature product: 1 / sqrt(nu t^2 sum 4^k)
    double info = 0.0;
    for (int k = 0; k < p_levels; ++k) info += std::pow(4.0, k);
    return 1.0 / std::sqrt(nu * t * t * info);
}

}  // namespace

TEST_CASE("geometric ladder construction") {
    const auto plan = geometric_ladder(3, 1.0, 1.0, 100.0, 0.0);
    REQUIRE(plan.blocks.size() == 3);
    CHECK(plan.total_atoms == 7);
    CHECK(plan.blocks[0].n_atoms == 1);
    CHECK(plan.blocks[0].phase_offset == 0.0);
    CHECK(plan.blocks[1].n_atoms == 2);
    CHECK(plan.blocks[1].phase_offset == Catch::Approx(-M_PI / 2.0));
    CHECK(plan.blocks[2].n_atoms == 4);
    CHECK(plan.blocks[2].phase_offset == Catch::Approx(-M_PI / 2.0));

    const auto degenerate = geometric_ladder(1, 1.0, 1.0, 10.0, 0.0);
    CHECK(degenerate.total_atoms == 1);
    CHECK(degenerate.blocks[0].correlation == Correlation::Uncorrelated);

    CHECK(geometric_ladder(4, 1.0, 1.0, 10.0, 0.0).total_atoms == 15);
}

TEST_CASE("combination plan construction") {
    const auto plan = combination_plan(7, 3, 4, 1.0, 1.0, 100.0, 0.0);
    CHECK(plan.total_atoms == 19);
    CHECK(plan.blocks.size() == 11);

    CHECK_THROWS_AS(combination_plan(7, 2, 4, 1.0, 1.0, 100.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(combination_plan(0, 3, 0, 1.0, 1.0, 100.0, 0.0), std::invalid_argument);

    const auto pure = combination_plan(12, 1, 0, 1.0, 1.0, 100.0, 0.0);
    CHECK(pure.total_atoms == 12);
    for (const auto& b : pure.blocks) CHECK(b.n_atoms == 1);

    // interrogation beyond the prior half-period breaks the no-ambiguity bound
    CHECK_THROWS_AS(combination_plan(3, 1, 0, 2.0, 1.0, 10.0, 0.0), std::invalid_argument);
}

TEST_CASE("ladder posterior width matches the quadrature product") {
    const auto plan = geometric_ladder(3, 1.0, 1.0, 100.0, 0.0);
    const auto rep = evaluate_plan(plan, M_PI / 2.0);
    CHECK_FALSE(rep.ambiguous);
    CHECK(rep.estimate == Catch::Approx(M_PI / 2.0).margin(1e-3));
    CHECK(rep.posterior_std == Catch::Approx(ladder_exact_std(3, 100.0, 1.0)).epsilon(0.02));

    // independent quadrature oracle over the same product
    const double nu = 100.0;
    const auto density = [&](double w) {
        double logp = 0.0;
        for (int n : {1, 2, 4}) {
            const double phase = n % 2 == 0 ? -M_PI / 2.0 : 0.0;
            const double pe = 0.5 * (1.0 + std::cos(n * w + phase));
            logp += 0.5 * nu * (std::log(pe) + std::log1p(-pe));
        }
        return std::exp(logp);
    };
    const auto mom = oracles::moments_of_unnormalized(density, 0.0, M_PI);
    CHECK(rep.posterior_std == Catch::Approx(mom.stddev).epsilon(5e-3));
}

TEST_CASE("combination posterior width matches the information sum") {
    const auto plan = combination_plan(7, 3, 4, 1.0, 1.0, 100.0, 0.0);
    const auto rep = evaluate_plan(plan, M_PI / 2.0);
    CHECK_FALSE(rep.ambiguous);
    // width 1/sqrt(nu (N_u + p N_e^2)) with N_u + p N_e^2 = 43
    CHECK(rep.posterior_std == Catch::Approx(1.0 / std::sqrt(100.0 * 43.0)).epsilon(0.02));
}

TEST_CASE("fully dephased plans collapse to the flat prior") {
    const auto plan = combination_plan(2, 3, 1, 1.0, 1.0, 100.0, 5.0);
    const auto rep = evaluate_plan(plan, M_PI / 2.0);
    CHECK(rep.ambiguous);
    CHECK(rep.posterior_std == Catch::Approx(M_PI / std::sqrt(12.0)).epsilon(0.02));
}

TEST_CASE("Heisenberg and shot-noise scaling laws") {
    // ladder: width tracks 1/sqrt(sum 4^k) exactly; the bundled check is the
    // scale-invariant product across depths
    double ladder_ref = 0.0;
    for (int p = 2; p <= 5; ++p) {
        const auto plan = geometric_ladder(p, 1.0, 1.0, 100.0, 0.0);
        const auto rep = evaluate_plan(plan, M_PI / 2.0);
        const double scaled = rep.posterior_std / ladder_exact_std(p, 100.0, 1.0);
        if (p == 2) ladder_ref = scaled;
        CHECK(scaled == Catch::Approx(ladder_ref).epsilon(0.01));
    }

    // uncorrelated ensembles: std * sqrt(N) constant (shot noise)
    double shot_ref = 0.0;
    for (long long n : {4, 16, 64}) {
        const auto plan = combination_plan(n, 1, 0, 1.0, 1.0, 100.0, 0.0);
        const auto rep = evaluate_plan(plan, M_PI / 2.0);
        const double scaled = rep.posterior_std * std::sqrt(static_cast<double>(n));
        if (n == 4) shot_ref = scaled;
        CHECK(scaled == Catch::Approx(shot_ref).epsilon(0.01));
    }
}

TEST_CASE("posterior width saturates the Cramer-Rao bound for single peaks") {
    const double gamma = 0.05, nu = 100.0;
    const auto plan = combination_plan(7, 3, 4, 1.0, 1.0, 100.0, gamma);
    const auto rep = evaluate_plan(plan, M_PI / 2.0);
    const double info =
        7.0 * std::exp(-2.0 * gamma) + 4.0 * 9.0 * std::exp(-2.0 * 3.0 * gamma);
    CHECK(rep.posterior_std == Catch::Approx(1.0 / std::sqrt(nu * info)).epsilon(0.05));
}

TEST_CASE("figure-style classifications over the double window") {
    const PriorWindow window{-M_PI, M_PI, 10'001};

    EvaluationOptions opts;
    opts.window = window;

    // ladder {1,2,4} at true frequency 0 with nu = 10: one central peak
    auto ladder = geometric_ladder(3, 1.0, 1.0, 10.0, 0.0);
    auto rep = evaluate_plan(ladder, 0.0, opts);
    CHECK_FALSE(rep.ambiguous);

    // a single interrogation cycle of (7,3,4) keeps one peak...
    auto good = combination_plan(7, 3, 4, 1.0, 1.0, 1.0, 0.0);
    rep = evaluate_plan(good, 0.0, opts);
    CHECK_FALSE(rep.ambiguous);

    // ...while (1,3,2) leaves the GHZ-3 aliases standing
    auto starved = combination_plan(1, 3, 2, 1.0, 1.0, 1.0, 0.0);
    rep = evaluate_plan(starved, 0.0, opts);
    CHECK(rep.ambiguous);
}

TEST_CASE("ladder cancels every alias over the full fringe window") {
    EvaluationOptions opts;
    opts.window = PriorWindow{-M_PI, M_PI, 10'001};
    for (int p : {2, 3, 4}) {
        const auto ladder = geometric_ladder(p, 1.0, 1.0, 100.0, 0.0);
        auto grid = evaluate_plan_posterior(ladder, 0.0, opts);
        grid.normalize();
        const auto d = grid.density();
        const double dmax = *std::max_element(d.begin(), d.end());
        int tall_peaks = 0;
        for (const auto& peak : ramsey::detail::local_maxima(grid.window(), d))
            if (peak.height > 0.5 * dmax) ++tall_peaks;
        CHECK(tall_peaks == 1);
    }
}

TEST_CASE("sampled-mode errors track the asymptotic width") {
    const auto plan = combination_plan(7, 3, 4, 1.0, 1.0, 100.0, 0.0);
    const double sigma_asym = evaluate_plan(plan, M_PI / 2.0).posterior_std;

    EvaluationOptions opts;
    opts.mode = EvaluationOptions::Mode::Sampled;
    double mse = 0.0;
    const int seeds = 300;
    for (int s = 0; s < seeds; ++s) {
        opts.seed = {static_cast<std::uint64_t>(s), 0};
        const auto rep = evaluate_plan(plan, M_PI / 2.0, opts);
        const double err = rep.estimate - M_PI / 2.0;
        mse += err * err;
    }
    mse /= seeds;
    CHECK(mse == Catch::Approx(sigma_asym * sigma_asym).epsilon(0.15));
}

TEST_CASE("optimizer fundamentals") {
    const auto lone = optimize_combination(1, 1.0, 1.0, 100.0, 0.0);
    CHECK(lone.n_u == 1);
    CHECK(lone.p_copies == 0);
    CHECK_FALSE(lone.fallback);

    for (long long budget : {10, 20}) {
        const auto best = optimize_combination(budget, 1.0, 1.0, 100.0, 0.0);
        const auto pure = evaluate_plan(combination_plan(budget, 1, 0, 1.0, 1.0, 100.0, 0.0),
                                        M_PI / 2.0);
        CHECK(best.report.posterior_std < pure.posterior_std);
    }
}

TEST_CASE("optimizer never loses to the pure plan and degrades with gamma") {
    double prev_std = 0.0;
    for (double gamma : {0.0, 0.02, 0.05, 0.1}) {
        const auto best = optimize_combination(20, 1.0, 1.0, 100.0, gamma);
        const auto pure =
            evaluate_plan(combination_plan(20, 1, 0, 1.0, 1.0, 100.0, gamma), M_PI / 2.0);
        CHECK(best.report.posterior_std <= pure.posterior_std * (1.0 + 1e-12));
        CHECK(best.report.posterior_std >= prev_std * (1.0 - 1e-12));
        prev_std = best.report.posterior_std;
    }
}

TEST_CASE("strong dephasing keeps GHZ blocks small") {
    for (long long budget : {10, 20, 40}) {
        const auto best = optimize_combination(budget, 1.0, 1.0, 100.0, 0.1);
        CHECK(best.n_e <= 5);
    }
}

TEST_CASE("hopeless dephasing falls back to the pure plan") {
    const auto out = optimize_combination(6, 1.0, 1.0, 100.0, 5.0);
    CHECK(out.fallback);
    CHECK(out.n_u == 6);
    CHECK(out.p_copies == 0);
    CHECK(out.report.ambiguous);
}

TEST_CASE("deep ladders lose to uncorrelated ensembles under strong dephasing") {
    const double gamma = 0.1;
    const auto ladder = geometric_ladder(6, 1.0, 1.0, 100.0, gamma);  // 63 atoms
    const auto pure = combination_plan(63, 1, 0, 1.0, 1.0, 100.0, gamma);
    CHECK(evaluate_plan(ladder, M_PI / 2.0).posterior_std >
          evaluate_plan(pure, M_PI / 2.0).posterior_std);
}

TEST_CASE("feedback phase recenters the next block at quadrature") {
    const auto posterior_peaked_at = [](double omega_hat) {
        const PriorWindow win{-M_PI, M_PI, 10'001};
        std::vector<double> lw(win.grid_points);
        for (int i = 0; i < win.grid_points; ++i) {
            const double x = win.omega(i) - omega_hat;
            lw[i] = -0.5 * x * x / (0.01 * 0.01);
        }
        return PosteriorGrid(win, lw);
    };

    CHECK(feedback_phase(posterior_peaked_at(M_PI / 2.0), 1, 1.0) ==
          Catch::Approx(0.0).margin(1e-6));
    CHECK(feedback_phase(posterior_peaked_at(0.0), 3, 1.0) ==
          Catch::Approx(M_PI / 2.0).margin(1e-6));
    CHECK(feedback_phase(posterior_peaked_at(M_PI / 2.0), 2, 1.0) ==
          Catch::Approx(-M_PI / 2.0).margin(1e-6));
}

TEST_CASE("hand-built mixed plans evaluate like any other") {
    // one atom plus one GHZ-3 block, assembled without the builders
    SchemePlan plan;
    plan.interrogation_time = 1.0;
    plan.prior_half_period = 1.0;
    plan.total_time = 100.0;
    plan.gamma = 0.0;
    plan.blocks.push_back({1, Correlation::Uncorrelated, 0.0, 100.0});
    plan.blocks.push_back({3, Correlation::Ghz, 0.0, 100.0});
    plan.total_atoms = 4;

    const auto rep = evaluate_plan(plan, M_PI / 2.0);
    CHECK_FALSE(rep.ambiguous);
    CHECK(rep.posterior_std == Catch::Approx(1.0 / std::sqrt(100.0 * 10.0)).epsilon(0.02));
}

TEST_CASE("evaluation guards") {
    const auto plan = geometric_ladder(2, 1.0, 1.0, 100.0, 0.0);
    CHECK_THROWS_AS(evaluate_plan(plan, 2.0 * M_PI), std::invalid_argument);

    EvaluationOptions opts;
    opts.mode = EvaluationOptions::Mode::Sampled;
    auto fractional = plan;
    fractional.total_time = 100.5;
    for (auto& b : fractional.blocks) b.repetitions = 100.5;
    CHECK_THROWS_AS(evaluate_plan(fractional, M_PI / 2.0, opts), std::invalid_argument);

    CHECK_THROWS_AS(optimize_combination(10, 1.0, 1.0, 100.0, 0.0, 4), std::invalid_argument);
}
