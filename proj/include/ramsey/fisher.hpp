#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ramsey/probe.hpp"

namespace ramsey {

/// Fisher information of the two-outcome readout, with a flag marking the
/// degenerate quadrature-less points sin(N*delta*t + phi) = 0 where the
/// closed form passes through a removable limit.
struct FisherInfo {
    double value = 0.0;  // [time^2]
    bool degenerate = false;
};

/// F = N^2 t^2 e^{-2Ngt} sin^2(theta) / (1 - cos^2(theta) e^{-2Ngt}),
/// theta = N*delta*t + phi. At exactly certain outcomes (gamma = 0,
/// cos = +-1) returns the removable limit N^2 t^2; at sin(theta) = 0 with
/// gamma > 0 the information vanishes. Both are flagged so optimizers can
/// traverse them instead of tripping on NaN.
inline FisherInfo fisher_information(const ProbePulseConfig& cfg) {
    cfg.validate();
    const double n = static_cast<double>(cfg.n_atoms);
    const double nt = n * cfg.t_interrogation;
    const double theta = collective_phase(cfg, cfg.omega0);
    const double d = std::exp(-n * cfg.gamma * cfg.t_interrogation);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double denom = 1.0 - c * c * d * d;
    if (denom <= 0.0) return {nt * nt, true};  // P(e) in {0,1} exactly
    return {nt * nt * d * d * s * s / denom, s == 0.0};
}

/// Evaluation point for a Cramer-Rao bound: a probe model plus the resource
/// accounting (total duration T, atoms per shot for uncorrelated ensembles).
struct CrbQuery {
    ProbePulseConfig cfg;
    double total_time = 1.0;  // T
    long long n_total = 1;    // atoms per shot; ignored for GHZ probes

    void validate() const {
        cfg.validate();
        if (!(total_time > 0.0) || !std::isfinite(total_time))
            throw std::invalid_argument("CrbQuery.total_time: must be positive and finite");
        if (n_total < 1) throw std::invalid_argument("CrbQuery.n_total: must be >= 1");
        if (cfg.t_interrogation > total_time)
            throw std::invalid_argument("CrbQuery: t_interrogation exceeds total_time");
    }
};

/// Number of repetitions packed into the total duration: N*T/t for
/// uncorrelated ensembles (every atom is an independent trial), T/t for a
/// GHZ block (one collective bit per shot).
inline double repetition_count(const CrbQuery& q) {
    const double per_time = q.total_time / q.cfg.t_interrogation;
    return q.cfg.correlation == Correlation::Uncorrelated
               ? static_cast<double>(q.n_total) * per_time
               : per_time;
}

/// 1/sqrt(nu * F); +infinity when the model point carries no information.
inline double crb_uncertainty(const CrbQuery& q) {
    q.validate();
    const FisherInfo fi = fisher_information(q.cfg);
    if (fi.value <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / std::sqrt(repetition_count(q) * fi.value);
}

struct OperatingPoint {
    double t_opt = 0.0;            // optimal interrogation time
    double detuning_opt = 0.0;     // detuning with N*delta*t = pi/2
    double min_uncertainty = 0.0;  // [rad/time]
    bool at_boundary = false;      // optimum clipped to t = total_time
};

namespace detail {

// Quadrature-point uncertainty as a function of t only; the detuning optimum
// N*delta*t = pi/2 is analytic, so just one dimension needs search.
inline double quadrature_crb(long long n_atoms, Correlation corr, double gamma, double total_time,
                             double t) {
    ProbePulseConfig cfg;
    cfg.correlation = corr;
    cfg.n_atoms = corr == Correlation::Ghz ? static_cast<int>(n_atoms) : 1;
    cfg.t_interrogation = t;
    cfg.gamma = gamma;
    cfg.omega0 = M_PI / (2.0 * cfg.n_atoms * t);
    CrbQuery q{cfg, total_time, n_atoms};
    return crb_uncertainty(q);
}

}  // namespace detail

/// Golden-section minimization of the quadrature-point CRB over
/// t in (0, total_time]. Requires gamma > 0 (at gamma = 0 there is no
/// interior optimum; the bound improves monotonically up to t = T).
inline OperatingPoint optimal_operating_point(long long n_atoms, Correlation corr, double gamma,
                                              double total_time) {
    if (n_atoms < 1) throw std::invalid_argument("optimal_operating_point: n_atoms must be >= 1");
    if (!(total_time > 0.0))
        throw std::invalid_argument("optimal_operating_point: total_time must be positive");
    if (!(gamma > 0.0))
        throw std::domain_error("optimal_operating_point: gamma must be positive");

    const long long n_probe = corr == Correlation::Ghz ? n_atoms : 1;
    const double np = static_cast<double>(n_probe);
    // log of the quadrature-point bound; the plain bound overflows to +inf
    // for deep dephasing (e^{2 N gamma t} past double range), which would
    // blind the bracketing comparisons
    const auto log_objective = [&](double t) {
        const double nu = corr == Correlation::Ghz
                              ? total_time / t
                              : static_cast<double>(n_atoms) * total_time / t;
        return np * gamma * t - 0.5 * std::log(nu * np * np * t * t);
    };
    const double t_unconstrained = 1.0 / (2.0 * gamma * np);

    OperatingPoint best;
    if (t_unconstrained >= total_time) {
        best.t_opt = total_time;
        best.at_boundary = true;
    } else {
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = 1e-12 * total_time, hi = total_time;
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        double fa = log_objective(a), fb = log_objective(b);
        for (int it = 0; it < 300 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
            if (fa < fb) {
                hi = b; b = a; fb = fa;
                a = hi - phi * (hi - lo);
                fa = log_objective(a);
            } else {
                lo = a; a = b; fa = fb;
                b = lo + phi * (hi - lo);
                fb = log_objective(b);
            }
        }
        best.t_opt = 0.5 * (lo + hi);
    }
    best.detuning_opt = M_PI / (2.0 * np * best.t_opt);
    best.min_uncertainty = detail::quadrature_crb(n_atoms, corr, gamma, total_time, best.t_opt);
    return best;
}

}  // namespace ramsey
