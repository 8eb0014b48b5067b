#pragma once

#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ramsey/bayes.hpp"
#include "ramsey/probe.hpp"
#include "ramsey/sampler.hpp"

namespace ramsey {

struct SchemeBlock {
    int n_atoms = 1;
    Correlation correlation = Correlation::Uncorrelated;
    double phase_offset = 0.0;
    double repetitions = 1.0;
};

/// Allocation of one interrogation cycle's atom budget across probe blocks,
/// every block repeated total_time / interrogation_time times.
struct SchemePlan {
    std::vector<SchemeBlock> blocks;
    long long total_atoms = 0;
    double interrogation_time = 1.0;  // t
    double prior_half_period = 1.0;   // L: prior window is [0, pi/L)
    double total_time = 1.0;          // T
    double gamma = 0.0;

    double repetitions() const { return total_time / interrogation_time; }

    void validate() const {
        if (blocks.empty()) throw std::invalid_argument("SchemePlan: no blocks");
        if (!(interrogation_time > 0.0) || !(prior_half_period > 0.0) || !(total_time > 0.0))
            throw std::invalid_argument("SchemePlan: times must be positive");
        if (interrogation_time > prior_half_period)
            throw std::invalid_argument(
                "SchemePlan: interrogation_time exceeds the no-ambiguity bound prior_half_period");
        if (gamma < 0.0) throw std::invalid_argument("SchemePlan: gamma must be >= 0");
        long long atoms = 0;
        for (const auto& b : blocks) {
            if (b.n_atoms < 1) throw std::invalid_argument("SchemePlan: block n_atoms must be >= 1");
            if (std::abs(b.repetitions - repetitions()) > 1e-9 * repetitions())
                throw std::invalid_argument("SchemePlan: block repetitions must equal total_time/interrogation_time");
            atoms += b.n_atoms;
        }
        if (atoms != total_atoms)
            throw std::invalid_argument("SchemePlan: total_atoms must equal the sum over blocks");
    }
};

/// GHZ blocks of 1, 2, 4, ..., 2^(p-1) atoms. Even blocks carry a -pi/2
/// collective offset so that a quadrature working point stays quadrature
/// for every level.
inline SchemePlan geometric_ladder(int p_levels, double t, double L, double T, double gamma) {
    if (p_levels < 1) throw std::invalid_argument("geometric_ladder: p_levels must be >= 1");
    SchemePlan plan;
    plan.interrogation_time = t;
    plan.prior_half_period = L;
    plan.total_time = T;
    plan.gamma = gamma;
    const double nu = plan.repetitions();
    for (int k = 0; k < p_levels; ++k) {
        const int n = 1 << k;
        const Correlation corr = n == 1 ? Correlation::Uncorrelated : Correlation::Ghz;
        const double phase = n % 2 == 0 ? -M_PI / 2.0 : 0.0;
        plan.blocks.push_back({n, corr, phase, nu});
        plan.total_atoms += n;
    }
    plan.validate();
    return plan;
}

/// n_u uncorrelated atoms plus p copies of a GHZ block of n_e atoms, all at
/// zero offset. n_e must be odd: even blocks are degenerate at the
/// quadrature design point omega0 * t = pi/2.
inline SchemePlan combination_plan(long long n_u, int n_e, long long p_copies, double t, double L,
                                   double T, double gamma) {
    if (n_u < 0 || p_copies < 0 || n_u + p_copies * n_e < 1)
        throw std::invalid_argument("combination_plan: need at least one atom");
    if (n_e < 1 || n_e % 2 == 0)
        throw std::invalid_argument("combination_plan: n_e must be an odd positive integer");
    SchemePlan plan;
    plan.interrogation_time = t;
    plan.prior_half_period = L;
    plan.total_time = T;
    plan.gamma = gamma;
    const double nu = plan.repetitions();
    for (long long i = 0; i < n_u; ++i)
        plan.blocks.push_back({1, Correlation::Uncorrelated, 0.0, nu});
    for (long long i = 0; i < p_copies; ++i) {
        const Correlation corr = n_e == 1 ? Correlation::Uncorrelated : Correlation::Ghz;
        plan.blocks.push_back({n_e, corr, 0.0, nu});
    }
    plan.total_atoms = n_u + p_copies * n_e;
    plan.validate();
    return plan;
}

struct EvaluationOptions {
    enum class Mode { Asymptotic, Sampled };
    Mode mode = Mode::Asymptotic;
    TrialSeed seed{};
    std::optional<PriorWindow> window;  // defaults to the design window [0, pi/L)
    int grid_points = kDefaultGridPoints;
};

/// Accumulates one record per block (expected counts or a seeded binomial
/// sample) into a grid posterior over the prior window.
inline PosteriorGrid evaluate_plan_posterior(const SchemePlan& plan, double omega0_true,
                                             const EvaluationOptions& opts = {}) {
    plan.validate();
    PriorWindow window = opts.window.value_or(
        PriorWindow{0.0, M_PI / plan.prior_half_period, opts.grid_points});
    window.validate();
    if (omega0_true < window.lower || omega0_true > window.upper)
        throw std::invalid_argument("evaluate_plan: omega0_true outside the prior window");

    const double nu = plan.repetitions();
    long long reps = 0;
    if (opts.mode == EvaluationOptions::Mode::Sampled) {
        reps = std::llround(nu);
        if (std::abs(nu - static_cast<double>(reps)) > 1e-9 || reps < 1)
            throw std::invalid_argument("evaluate_plan: sampled mode needs integer repetitions T/t");
    }

    PosteriorGrid grid(window);
    for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
        const auto& b = plan.blocks[i];
        ProbePulseConfig cfg;
        cfg.n_atoms = b.n_atoms;
        cfg.correlation = b.correlation;
        cfg.omega0 = omega0_true;
        cfg.omega_ref = 0.0;
        cfg.t_interrogation = plan.interrogation_time;
        cfg.phase_offset = b.phase_offset;
        cfg.gamma = plan.gamma;
        if (opts.mode == EvaluationOptions::Mode::Asymptotic) {
            grid.add(expected_record(cfg, nu));
        } else {
            grid.add(sample_record(cfg, reps, {opts.seed.seed, opts.seed.stream + i}));
        }
    }
    return grid;
}

inline PrecisionReport evaluate_plan(const SchemePlan& plan, double omega0_true,
                                     const EvaluationOptions& opts = {}) {
    return report(evaluate_plan_posterior(plan, omega0_true, opts));
}

struct OptimizedCombination {
    SchemePlan plan;
    PrecisionReport report;
    long long n_u = 0;
    int n_e = 1;
    long long p_copies = 0;
    bool fallback = false;  // no non-ambiguous candidate; pure-uncorrelated returned
};

/// Exhaustive search over (n_u, n_e, p) at the design point omega0 = pi/2L:
/// minimizes the grid posterior_std among non-ambiguous plans. Ties break to
/// the smaller n_e, then the smaller p. Candidates are evaluated in parallel
/// and reduced in enumeration order, so the result is deterministic.
inline OptimizedCombination optimize_combination(long long n_total, double t, double L, double T,
                                                 double gamma, int n_e_max = 15) {
    if (n_total < 1) throw std::invalid_argument("optimize_combination: n_total must be >= 1");
    if (n_e_max < 1 || n_e_max % 2 == 0)
        throw std::invalid_argument("optimize_combination: n_e_max must be odd and >= 1");

    struct Candidate {
        long long n_u;
        int n_e;
        long long p;
    };
    std::vector<Candidate> candidates;
    for (int n_e = 1; n_e <= n_e_max; n_e += 2) {
        for (long long p = 0; p * n_e <= n_total; ++p) {
            if (p == 0 && n_e != 1) continue;  // duplicates of the pure plan
            candidates.push_back({n_total - p * n_e, n_e, p});
        }
    }

    const double omega_design = M_PI / (2.0 * L);
    const auto evaluate = [&](const Candidate& c) {
        return evaluate_plan(combination_plan(c.n_u, c.n_e, c.p, t, L, T, gamma), omega_design);
    };

    std::vector<PrecisionReport> reports(candidates.size());
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < candidates.size(); i = next.fetch_add(1))
                reports[i] = evaluate(candidates[i]);
        }));
    }
    for (auto& f : futures) f.get();

    int best = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (reports[i].ambiguous) continue;
        if (best < 0 || reports[i].posterior_std < reports[best].posterior_std)
            best = static_cast<int>(i);
    }

    OptimizedCombination out;
    if (best < 0) {
        out.fallback = true;
        out.n_u = n_total;
        out.n_e = 1;
        out.p_copies = 0;
        out.plan = combination_plan(n_total, 1, 0, t, L, T, gamma);
        out.report = evaluate({n_total, 1, 0});
    } else {
        const auto& c = candidates[best];
        out.n_u = c.n_u;
        out.n_e = c.n_e;
        out.p_copies = c.p;
        out.plan = combination_plan(c.n_u, c.n_e, c.p, t, L, T, gamma);
        out.report = reports[best];
    }
    return out;
}

/// Offset that puts the next block's collective phase at the maximal-Fisher
/// quadrature point: phi = pi/2 - N * estimate * t, wrapped to (-pi, pi].
/// For an ambiguous posterior this uses the global argmax; callers see the
/// warning on the report they hold.
inline double feedback_phase(const PosteriorGrid& posterior, int block_n_atoms, double t) {
    if (block_n_atoms < 1) throw std::invalid_argument("feedback_phase: block_n_atoms must be >= 1");
    const PrecisionReport rep = report(posterior);
    const double raw = M_PI / 2.0 - static_cast<double>(block_n_atoms) * rep.estimate * t;
    double wrapped = std::remainder(raw, 2.0 * M_PI);
    if (wrapped <= -M_PI) wrapped += 2.0 * M_PI;
    return wrapped;
}

}  // namespace ramsey
