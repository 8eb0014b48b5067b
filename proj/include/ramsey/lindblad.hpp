#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "ramsey/probe.hpp"

namespace ramsey {

/// 2x2 density matrix in the {|g>, |e>} basis.
struct DensityMatrix2 {
    std::complex<double> gg{0.0, 0.0};
    std::complex<double> ge{0.0, 0.0};
    std::complex<double> eg{0.0, 0.0};
    std::complex<double> ee{0.0, 0.0};

    static DensityMatrix2 ground() { return {{1.0, 0.0}, {}, {}, {0.0, 0.0}}; }

    double trace() const { return gg.real() + ee.real(); }

    double hermiticity_defect() const {
        return std::max({std::abs(ge - std::conj(eg)), std::abs(gg.imag()), std::abs(ee.imag())});
    }

    /// Smallest eigenvalue of the Hermitian part.
    double min_eigenvalue() const {
        const double a = gg.real(), d = ee.real();
        const double disc = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(ge));
        return 0.5 * (a + d) - disc;
    }

    bool is_physical(double tol = 1e-12) const {
        return std::abs(trace() - 1.0) <= tol && hermiticity_defect() <= tol &&
               min_eigenvalue() >= -tol;
    }
};

/// pi/2 pulse taking |g> to (|g>+|e>)/sqrt(2); rho -> U rho U^T with the
/// real rotation U = [[1,-1],[1,1]]/sqrt(2).
inline DensityMatrix2 pi_half_pulse(const DensityMatrix2& r) {
    DensityMatrix2 out;
    out.gg = 0.5 * (r.gg - r.eg - r.ge + r.ee);
    out.ge = 0.5 * (r.gg - r.eg + r.ge - r.ee);
    out.eg = 0.5 * (r.gg + r.eg - r.ge - r.ee);
    out.ee = 0.5 * (r.gg + r.eg + r.ge + r.ee);
    return out;
}

namespace detail {

// Rotating-frame dephasing generator:
//   d(rho)/dt = i*delta*(rho|e><e| - |e><e|rho) + (gamma/2)(sz rho sz - rho)
// Diagonals are conserved; coherences rotate and decay.
inline DensityMatrix2 lindblad_rhs(const DensityMatrix2& r, double delta, double gamma) {
    const std::complex<double> i_delta{0.0, delta};
    DensityMatrix2 d;
    d.gg = {0.0, 0.0};
    d.ee = {0.0, 0.0};
    d.ge = (i_delta - gamma) * r.ge;
    d.eg = (-i_delta - gamma) * r.eg;
    return d;
}

inline DensityMatrix2 axpy(const DensityMatrix2& r, const DensityMatrix2& d, double h) {
    return {r.gg + h * d.gg, r.ge + h * d.ge, r.eg + h * d.eg, r.ee + h * d.ee};
}

}  // namespace detail

/// Classic RK4 with a fixed step count over the interrogation window.
inline DensityMatrix2 evolve_dephasing(DensityMatrix2 rho, double delta, double gamma,
                                       double duration, int steps) {
    const double h = duration / steps;
    for (int s = 0; s < steps; ++s) {
        const auto k1 = detail::lindblad_rhs(rho, delta, gamma);
        const auto k2 = detail::lindblad_rhs(detail::axpy(rho, k1, 0.5 * h), delta, gamma);
        const auto k3 = detail::lindblad_rhs(detail::axpy(rho, k2, 0.5 * h), delta, gamma);
        const auto k4 = detail::lindblad_rhs(detail::axpy(rho, k3, h), delta, gamma);
        rho.gg += (h / 6.0) * (k1.gg + 2.0 * k2.gg + 2.0 * k3.gg + k4.gg);
        rho.ge += (h / 6.0) * (k1.ge + 2.0 * k2.ge + 2.0 * k3.ge + k4.ge);
        rho.eg += (h / 6.0) * (k1.eg + 2.0 * k2.eg + 2.0 * k3.eg + k4.eg);
        rho.ee += (h / 6.0) * (k1.ee + 2.0 * k2.ee + 2.0 * k3.ee + k4.ee);
    }
    return rho;
}

/// Full numerical Ramsey sequence on a single atom: pulse, dephased free
/// evolution, pulse, excited-state population.
inline double ramsey_sequence_population(const ProbePulseConfig& cfg, int steps) {
    DensityMatrix2 rho = pi_half_pulse(DensityMatrix2::ground());
    rho = evolve_dephasing(rho, cfg.detuning(), cfg.gamma, cfg.t_interrogation, steps);
    rho = pi_half_pulse(rho);
    return rho.ee.real();
}

/// Integrates the master equation through the Ramsey sequence, halving the
/// step until two successive refinements agree below `tol`. Cross-checks the
/// closed form p_excited; the closed form stays the production path.
inline double lindblad_ramsey_oracle(const ProbePulseConfig& cfg, double tol = 1e-10,
                                     int max_steps = 1 << 22) {
    cfg.validate();
    if (cfg.n_atoms != 1)
        throw std::invalid_argument("lindblad_ramsey_oracle: single-atom sequences only");
    if (cfg.phase_offset != 0.0)
        throw std::invalid_argument("lindblad_ramsey_oracle: phase_offset must be 0");

    int steps = 16;
    double prev = ramsey_sequence_population(cfg, steps);
    while (steps <= max_steps / 2) {
        steps *= 2;
        const double cur = ramsey_sequence_population(cfg, steps);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("lindblad_ramsey_oracle: integrator did not converge at max step count");
}

}  // namespace ramsey
