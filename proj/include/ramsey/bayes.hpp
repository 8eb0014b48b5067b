#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ramsey/probe.hpp"

namespace ramsey {

inline constexpr int kMinGridPoints = 1000;
inline constexpr int kDefaultGridPoints = 10'000;
inline constexpr double kCredibleMass = 0.6827;

// Side peaks above this fraction of the global maximum count as ambiguity
// candidates; single-cycle combination posteriors put their aliases at a
// quarter of the main height, healthy ladders keep residual lobes near 1e-3.
inline constexpr double kPeakFraction = 0.2;
// A posterior that never falls below half its maximum anywhere in the window
// carries no usable peak structure (fully dephased or uniform data).
inline constexpr double kFlatFraction = 0.5;

/// Hard-support prior interval [lower, upper] discretized on a uniform grid.
struct PriorWindow {
    double lower = 0.0;
    double upper = M_PI;
    int grid_points = kDefaultGridPoints;

    void validate() const {
        if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper))
            throw std::invalid_argument("PriorWindow: requires finite upper > lower");
        if (grid_points < kMinGridPoints)
            throw std::invalid_argument("PriorWindow.grid_points: resolution floor is 1000");
    }

    double step() const { return (upper - lower) / (grid_points - 1); }
    double omega(int i) const { return lower + step() * i; }
    double center() const { return 0.5 * (lower + upper); }

    bool operator==(const PriorWindow& o) const {
        return lower == o.lower && upper == o.upper && grid_points == o.grid_points;
    }
};

/// Outcome counts for one probe configuration. Counts are non-negative and
/// integral unless flagged asymptotic (expected counts nu*P).
struct MeasurementRecord {
    ProbePulseConfig cfg;
    double count_excited = 0.0;
    double count_ground = 0.0;
    bool asymptotic = false;

    void validate() const {
        cfg.validate();
        if (!(count_excited >= 0.0) || !(count_ground >= 0.0) ||
            !std::isfinite(count_excited) || !std::isfinite(count_ground))
            throw std::invalid_argument("MeasurementRecord: counts must be finite and >= 0");
        if (!asymptotic &&
            (std::nearbyint(count_excited) != count_excited ||
             std::nearbyint(count_ground) != count_ground))
            throw std::invalid_argument(
                "MeasurementRecord: non-integer counts require the asymptotic flag");
    }
};

/// Discretized log-posterior over the candidate frequency.
///
/// Records are stored as sufficient statistics (outcome counts per distinct
/// likelihood shape), so accumulation is exactly commutative and associative:
/// k unit records match one count-k record bit for bit, and any permutation
/// or parallel merge of batches reproduces identical log-weights.
class PosteriorGrid {
public:
    explicit PosteriorGrid(PriorWindow window) : window_(window) {
        window_.validate();
        base_log_weights_.assign(window_.grid_points, 0.0);
    }

    /// Start from externally supplied log-weights (tests, custom priors).
    PosteriorGrid(PriorWindow window, std::vector<double> log_weights) : window_(window) {
        window_.validate();
        if (static_cast<int>(log_weights.size()) != window_.grid_points)
            throw std::invalid_argument("PosteriorGrid: log_weights size must match grid_points");
        base_log_weights_ = std::move(log_weights);
    }

    const PriorWindow& window() const { return window_; }
    bool normalized() const { return normalized_; }

    void add(const MeasurementRecord& rec) {
        rec.validate();
        normalized_ = false;
        for (auto& e : entries_) {
            if (e.cfg.shape_key() == rec.cfg.shape_key()) {
                e.count_excited += rec.count_excited;
                e.count_ground += rec.count_ground;
                return;
            }
        }
        entries_.push_back({rec.cfg, rec.count_excited, rec.count_ground});
    }

    /// Deterministic merge of a grid accumulated over a disjoint record batch.
    void merge(const PosteriorGrid& other) {
        if (!(window_ == other.window_))
            throw std::invalid_argument("PosteriorGrid::merge: windows differ");
        normalized_ = false;
        for (int i = 0; i < window_.grid_points; ++i)
            base_log_weights_[i] += other.base_log_weights_[i];
        for (const auto& e : other.entries_)
            add({e.cfg, e.count_excited, e.count_ground, true});
    }

    /// Unnormalized log-weights: prior plus all accumulated log-likelihoods.
    /// Entries are folded in canonical order, so the result is independent of
    /// accumulation history.
    std::vector<double> log_weights() const {
        std::vector<const Entry*> ordered;
        ordered.reserve(entries_.size());
        for (const auto& e : entries_) ordered.push_back(&e);
        std::sort(ordered.begin(), ordered.end(), [](const Entry* a, const Entry* b) {
            return a->cfg.shape_key() < b->cfg.shape_key();
        });

        std::vector<double> lw = base_log_weights_;
        const int n = window_.grid_points;
        for (const Entry* e : ordered) {
            for (int i = 0; i < n; ++i) {
                const double pe = p_excited_at(e->cfg, window_.omega(i));
                const double pg = 1.0 - pe;
                double add = 0.0;
                if (e->count_excited > 0.0) add += e->count_excited * std::log(pe);
                if (e->count_ground > 0.0) add += e->count_ground * std::log(pg);
                lw[i] += add;
            }
        }
        return lw;
    }

    /// Normalizes so the trapezoidal integral of exp(log_density) equals 1.
    /// Throws when every grid point has vanished (inconsistent data).
    void normalize() {
        std::vector<double> lw = log_weights();
        const double m = *std::max_element(lw.begin(), lw.end());
        if (!std::isfinite(m))
            throw std::runtime_error("PosteriorGrid: inconsistent data, posterior vanished at every grid point");
        const double h = window_.step();
        double z = 0.0;
        const int n = window_.grid_points;
        for (int i = 0; i < n; ++i) {
            const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
            z += w * std::exp(lw[i] - m);
        }
        const double log_z = std::log(z);
        for (double& v : lw) v -= m + log_z;
        log_density_ = std::move(lw);
        normalized_ = true;
    }

    /// Normalized log-density (call normalize() first).
    const std::vector<double>& log_density() const {
        if (!normalized_) throw std::logic_error("PosteriorGrid: not normalized");
        return log_density_;
    }

    std::vector<double> density() const {
        const auto& ld = log_density();
        std::vector<double> d(ld.size());
        std::transform(ld.begin(), ld.end(), d.begin(), [](double v) { return std::exp(v); });
        return d;
    }

private:
    struct Entry {
        ProbePulseConfig cfg;
        double count_excited = 0.0;
        double count_ground = 0.0;
    };

    PriorWindow window_;
    std::vector<double> base_log_weights_;
    std::vector<Entry> entries_;
    std::vector<double> log_density_;
    bool normalized_ = false;
};

/// Bayes update as a value operation; normalization stays deferred.
inline PosteriorGrid accumulate(PosteriorGrid prior, const MeasurementRecord& record) {
    prior.add(record);
    return prior;
}

struct PrecisionReport {
    double estimate = 0.0;       // posterior maximum [rad/time]
    double half_width = 0.0;     // smallest delta with 68.27% mass in [est-delta, est+delta]
    bool ambiguous = false;
    std::vector<double> peak_positions;
    double posterior_std = 0.0;  // sqrt(E[w^2] - E[w]^2)
};

namespace detail {

struct GridPeak {
    double position = 0.0;
    double height = 0.0;
};

inline bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Local maxima with plateau runs merged into a single peak; a run touching
/// the window edge counts when it dominates its inner neighbor.
inline std::vector<GridPeak> local_maxima(const PriorWindow& win, const std::vector<double>& d) {
    std::vector<GridPeak> peaks;
    const int n = static_cast<int>(d.size());
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && nearly_equal(d[j + 1], d[i])) ++j;
        const bool left_ok = (i == 0) || d[i - 1] < d[i];
        const bool right_ok = (j == n - 1) || d[j + 1] < d[j];
        if (left_ok && right_ok) peaks.push_back({win.omega((i + j) / 2), d[(i + j) / 2]});
        i = j + 1;
    }
    return peaks;
}

/// CDF of the piecewise-linear density at an arbitrary point.
class TrapezoidCdf {
public:
    TrapezoidCdf(const PriorWindow& win, const std::vector<double>& d) : win_(win), d_(d) {
        cum_.resize(d.size(), 0.0);
        const double h = win.step();
        for (std::size_t i = 1; i < d.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * h * (d[i - 1] + d[i]);
    }

    double operator()(double x) const {
        if (x <= win_.lower) return 0.0;
        if (x >= win_.upper) return cum_.back();
        const double h = win_.step();
        const double pos = (x - win_.lower) / h;
        int k = std::min(static_cast<int>(pos), static_cast<int>(d_.size()) - 2);
        const double x_k = win_.omega(k);
        const double frac = (x - x_k) / h;
        const double dx = d_[k] + frac * (d_[k + 1] - d_[k]);
        return cum_[k] + 0.5 * (x - x_k) * (d_[k] + dx);
    }

private:
    const PriorWindow& win_;
    const std::vector<double>& d_;
    std::vector<double> cum_;
};

}  // namespace detail

/// Point estimate, credible half-width, spread and the ambiguity verdict.
inline PrecisionReport report(const PosteriorGrid& posterior) {
    PosteriorGrid grid = posterior;
    if (!grid.normalized()) grid.normalize();
    const PriorWindow& win = grid.window();
    const std::vector<double> d = grid.density();
    const int n = win.grid_points;

    PrecisionReport rep;

    // Argmax; exact ties break toward the window center.
    const double dmax = *std::max_element(d.begin(), d.end());
    int best = -1;
    for (int i = 0; i < n; ++i) {
        if (d[i] != dmax) continue;
        if (best < 0 ||
            std::abs(win.omega(i) - win.center()) < std::abs(win.omega(best) - win.center()))
            best = i;
    }
    rep.estimate = win.omega(best);

    // Moments by trapezoidal quadrature.
    const double h = win.step();
    double mean = 0.0, second = 0.0, dmin = d[0];
    for (int i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
        mean += w * d[i] * win.omega(i);
        second += w * d[i] * win.omega(i) * win.omega(i);
        dmin = std::min(dmin, d[i]);
    }
    rep.posterior_std = std::sqrt(std::max(0.0, second - mean * mean));

    // Smallest symmetric interval around the estimate holding 68.27% mass.
    const detail::TrapezoidCdf cdf(win, d);
    const double width = win.upper - win.lower;
    double lo = 0.0, hi = width;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double mass = cdf(rep.estimate + mid) - cdf(rep.estimate - mid);
        (mass >= kCredibleMass ? hi : lo) = mid;
    }
    rep.half_width = hi;

    const auto peaks = detail::local_maxima(win, d);
    for (const auto& p : peaks)
        if (p.height > kPeakFraction * dmax) rep.peak_positions.push_back(p.position);

    rep.ambiguous = rep.peak_positions.size() > 1 ||
                    dmin > kFlatFraction * dmax ||
                    rep.half_width > 3.0 * rep.posterior_std;
    return rep;
}

}  // namespace ramsey
