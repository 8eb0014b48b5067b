#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace ramsey {

/// Probe preparation: independent atoms or a maximally entangled block.
enum class Correlation { Uncorrelated, Ghz };

/// One interrogation setting of a Ramsey probe.
///
/// An ensemble of N uncorrelated atoms is represented as N independent
/// configs with n_atoms = 1; n_atoms > 1 is reserved for GHZ blocks.
struct ProbePulseConfig {
    int n_atoms = 1;
    Correlation correlation = Correlation::Uncorrelated;
    double omega0 = 0.0;           // true transition frequency [rad/time]
    double omega_ref = 0.0;        // driving-field frequency [rad/time]
    double t_interrogation = 1.0;  // free-evolution time between pulses
    double phase_offset = 0.0;     // collective phase applied before readout [rad]
    double gamma = 0.0;            // single-atom dephasing rate [1/time]

    double detuning() const { return omega0 - omega_ref; }

    void validate() const {
        if (n_atoms < 1)
            throw std::invalid_argument("ProbePulseConfig.n_atoms: must be >= 1");
        if (!(t_interrogation > 0.0) || !std::isfinite(t_interrogation))
            throw std::invalid_argument("ProbePulseConfig.t_interrogation: must be positive and finite");
        if (gamma < 0.0 || !std::isfinite(gamma))
            throw std::invalid_argument("ProbePulseConfig.gamma: must be non-negative and finite");
        if (correlation == Correlation::Uncorrelated && n_atoms != 1)
            throw std::invalid_argument(
                "ProbePulseConfig.n_atoms: uncorrelated probes are per-atom; "
                "use n_atoms = 1 and repeat the config");
        if (!std::isfinite(omega0) || !std::isfinite(omega_ref) || !std::isfinite(phase_offset))
            throw std::invalid_argument("ProbePulseConfig: frequencies and phase must be finite");
    }

    /// Likelihood-shape key: two records whose configs agree on these fields
    /// produce identical posterior factors (omega0 is swept over the grid,
    /// so it is deliberately excluded).
    std::tuple<int, int, double, double, double, double> shape_key() const {
        return {n_atoms, static_cast<int>(correlation), omega_ref,
                t_interrogation, phase_offset, gamma};
    }
};

/// Collective phase seen at readout for a candidate frequency.
inline double collective_phase(const ProbePulseConfig& cfg, double omega0) {
    return static_cast<double>(cfg.n_atoms) * (omega0 - cfg.omega_ref) * cfg.t_interrogation +
           cfg.phase_offset;
}

/// Probability of the excited readout: (1 + cos(N*delta*t + phi) e^{-N*gamma*t}) / 2.
/// Evaluated at a candidate frequency omega0 in place of cfg.omega0.
inline double p_excited_at(const ProbePulseConfig& cfg, double omega0) {
    const double n = static_cast<double>(cfg.n_atoms);
    const double contrast = std::exp(-n * cfg.gamma * cfg.t_interrogation);
    return 0.5 * (1.0 + std::cos(collective_phase(cfg, omega0)) * contrast);
}

inline double p_excited(const ProbePulseConfig& cfg) {
    cfg.validate();
    return p_excited_at(cfg, cfg.omega0);
}

inline double p_ground(const ProbePulseConfig& cfg) { return 1.0 - p_excited(cfg); }

}  // namespace ramsey
