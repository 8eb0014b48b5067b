#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "ramsey/bayes.hpp"
#include "ramsey/probe.hpp"

namespace ramsey {

/// Keys one reproducible sample stream. (seed, stream, draw index) fully
/// determines every draw on every platform.
struct TrialSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

namespace rng {

// splitmix64 finalizer; full-avalanche 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based draw: no sequential state, so distinct (stream, index)
/// pairs can be consumed concurrently and replayed exactly.
inline std::uint64_t draw_u64(const TrialSeed& key, std::uint64_t index) {
    return mix64(mix64(mix64(key.seed) ^ key.stream) ^ index);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double draw_unit(const TrialSeed& key, std::uint64_t index) {
    return static_cast<double>(draw_u64(key, index) >> 11) * 0x1.0p-53;
}

// Binomial via CDF inversion of a single uniform: log-space PMF recurrence
// keeps q^n from underflowing at large n.
inline long long binomial_inversion(long long n, double p, double u) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    const double lp = std::log(p), lq = std::log1p(-p);
    double log_pmf = static_cast<double>(n) * lq;  // k = 0
    double cum = 0.0;
    for (long long k = 0; k <= n; ++k) {
        cum += std::exp(log_pmf);
        if (u < cum) return k;
        log_pmf += std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k + 1)) +
                   lp - lq;
    }
    return n;  // u landed in the rounding tail
}

inline long long binomial(long long n, double p, const TrialSeed& key) {
    constexpr long long kBernoulliCutoff = 100'000;
    if (n <= kBernoulliCutoff) {
        long long hits = 0;
        for (long long i = 0; i < n; ++i)
            if (draw_unit(key, static_cast<std::uint64_t>(i)) < p) ++hits;
        return hits;
    }
    return binomial_inversion(n, p, draw_unit(key, 0));
}

}  // namespace rng

/// Binomial counts of excited/ground outcomes over repeated interrogations.
inline MeasurementRecord sample_record(const ProbePulseConfig& cfg, long long repetitions,
                                       const TrialSeed& seed) {
    if (repetitions < 1) throw std::invalid_argument("sample_record: repetitions must be >= 1");
    const double p = p_excited(cfg);
    const long long k = rng::binomial(repetitions, p, seed);
    MeasurementRecord rec;
    rec.cfg = cfg;
    rec.count_excited = static_cast<double>(k);
    rec.count_ground = static_cast<double>(repetitions - k);
    rec.asymptotic = false;
    return rec;
}

/// Asymptotic (expected, generally non-integer) counts nu*P(e), nu*P(g).
inline MeasurementRecord expected_record(const ProbePulseConfig& cfg, double repetitions) {
    if (!(repetitions > 0.0) || !std::isfinite(repetitions))
        throw std::invalid_argument("expected_record: repetitions must be positive and finite");
    const double p = p_excited(cfg);
    MeasurementRecord rec;
    rec.cfg = cfg;
    rec.count_excited = repetitions * p;
    rec.count_ground = repetitions * (1.0 - p);
    rec.asymptotic = true;
    return rec;
}

}  // namespace ramsey
