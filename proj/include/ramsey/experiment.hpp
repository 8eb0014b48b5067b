#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ramsey/bayes.hpp"
#include "ramsey/fisher.hpp"
#include "ramsey/lindblad.hpp"
#include "ramsey/probe.hpp"
#include "ramsey/sampler.hpp"
#include "ramsey/schemes.hpp"

namespace ramsey {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class ExperimentKind { CrbSweep, Posterior, SchemeOpt, MonteCarlo, OracleCheck };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::CrbSweep: return "crb-sweep";
        case ExperimentKind::Posterior: return "posterior";
        case ExperimentKind::SchemeOpt: return "scheme-opt";
        case ExperimentKind::MonteCarlo: return "monte-carlo";
        case ExperimentKind::OracleCheck: return "oracle-check";
    }
    throw std::logic_error("unknown experiment kind");
}

inline ExperimentKind kind_from_string(const std::string& s) {
    if (s == "crb-sweep") return ExperimentKind::CrbSweep;
    if (s == "posterior") return ExperimentKind::Posterior;
    if (s == "scheme-opt") return ExperimentKind::SchemeOpt;
    if (s == "monte-carlo") return ExperimentKind::MonteCarlo;
    if (s == "oracle-check") return ExperimentKind::OracleCheck;
    throw std::invalid_argument("kind: unknown experiment '" + s + "'");
}

/// Fully resolved run description. Serializes to/from JSON; the emitted
/// manifest embeds the same object, so any manifest is itself a valid
/// --config input.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::CrbSweep;
    std::uint64_t seed = 0;
    int grid_points = kDefaultGridPoints;

    // crb-sweep
    std::vector<double> gammas{0.0, 0.1};
    int n_min = 1;
    int n_max = 100;
    double total_time = 100.0;
    double interrogation_time = 1.0;

    // posterior + scheme-opt + monte-carlo shared physics
    std::string scheme = "ladder";  // ladder | combination | uncorrelated
    int p_levels = 3;
    long long n_u = 7;
    int n_e = 3;
    long long p_copies = 4;
    double t = 1.0;
    double L = 1.0;
    double nu = 100.0;
    double gamma = 0.0;
    double omega_true = M_PI / 2.0;
    std::vector<double> window;  // optional [lower, upper]; empty = design window
    std::string mode = "asymptotic";  // asymptotic | sampled

    // scheme-opt
    long long budget_min = 1;
    long long budget_max = 60;
    int n_e_max = 15;

    // monte-carlo
    int n_seeds = 200;
    long long repetitions = 10'000;

    // oracle-check
    int points = 100;
    std::vector<double> delta_range{-3.0, 3.0};
    std::vector<double> gamma_range{0.0, 1.0};
    std::vector<double> t_range{0.1, 2.0};

    void validate() const {
        if (grid_points < kMinGridPoints)
            throw std::invalid_argument("grid_points: resolution floor is 1000");
        switch (kind) {
            case ExperimentKind::CrbSweep:
                if (n_min < 1 || n_max < n_min)
                    throw std::invalid_argument("n_min/n_max: need 1 <= n_min <= n_max");
                if (!(total_time > 0.0) || !(interrogation_time > 0.0) ||
                    interrogation_time > total_time)
                    throw std::invalid_argument(
                        "interrogation_time/total_time: need 0 < t <= T");
                for (double g : gammas)
                    if (g < 0.0) throw std::invalid_argument("gammas: must be >= 0");
                break;
            case ExperimentKind::Posterior:
                if (scheme != "ladder" && scheme != "combination" && scheme != "uncorrelated")
                    throw std::invalid_argument("scheme: expected ladder|combination|uncorrelated");
                if (mode != "asymptotic" && mode != "sampled")
                    throw std::invalid_argument("mode: expected asymptotic|sampled");
                if (!window.empty() && window.size() != 2)
                    throw std::invalid_argument("window: expected [lower, upper]");
                if (!(nu > 0.0)) throw std::invalid_argument("nu: must be positive");
                break;
            case ExperimentKind::SchemeOpt:
                if (budget_min < 1 || budget_max < budget_min)
                    throw std::invalid_argument("budget_min/budget_max: need 1 <= min <= max");
                if (n_e_max < 1 || n_e_max % 2 == 0)
                    throw std::invalid_argument("n_e_max: must be odd and >= 1");
                if (!(nu > 0.0)) throw std::invalid_argument("nu: must be positive");
                break;
            case ExperimentKind::MonteCarlo:
                if (n_seeds < 1) throw std::invalid_argument("n_seeds: must be >= 1");
                if (repetitions < 1) throw std::invalid_argument("repetitions: must be >= 1");
                break;
            case ExperimentKind::OracleCheck:
                if (points < 1) throw std::invalid_argument("points: must be >= 1");
                for (const auto* r : {&delta_range, &gamma_range, &t_range})
                    if (r->size() != 2 || (*r)[0] > (*r)[1])
                        throw std::invalid_argument("ranges: expected [lo, hi] with lo <= hi");
                if (t_range[0] <= 0.0) throw std::invalid_argument("t_range: times must be positive");
                if (gamma_range[0] < 0.0) throw std::invalid_argument("gamma_range: must be >= 0");
                break;
        }
        if (t > L) throw std::invalid_argument("t: interrogation beyond the prior half-period L");
    }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = nlohmann::json{{"kind", to_string(c.kind)},
                       {"seed", c.seed},
                       {"grid_points", c.grid_points},
                       {"gammas", c.gammas},
                       {"n_min", c.n_min},
                       {"n_max", c.n_max},
                       {"total_time", c.total_time},
                       {"interrogation_time", c.interrogation_time},
                       {"scheme", c.scheme},
                       {"p_levels", c.p_levels},
                       {"n_u", c.n_u},
                       {"n_e", c.n_e},
                       {"p_copies", c.p_copies},
                       {"t", c.t},
                       {"L", c.L},
                       {"nu", c.nu},
                       {"gamma", c.gamma},
                       {"omega_true", c.omega_true},
                       {"window", c.window},
                       {"mode", c.mode},
                       {"budget_min", c.budget_min},
                       {"budget_max", c.budget_max},
                       {"n_e_max", c.n_e_max},
                       {"n_seeds", c.n_seeds},
                       {"repetitions", c.repetitions},
                       {"points", c.points},
                       {"delta_range", c.delta_range},
                       {"gamma_range", c.gamma_range},
                       {"t_range", c.t_range}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c.kind = kind_from_string(j.at("kind").get<std::string>());
    const auto opt = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    opt("seed", c.seed);
    opt("grid_points", c.grid_points);
    opt("gammas", c.gammas);
    opt("n_min", c.n_min);
    opt("n_max", c.n_max);
    opt("total_time", c.total_time);
    opt("interrogation_time", c.interrogation_time);
    opt("scheme", c.scheme);
    opt("p_levels", c.p_levels);
    opt("n_u", c.n_u);
    opt("n_e", c.n_e);
    opt("p_copies", c.p_copies);
    opt("t", c.t);
    opt("L", c.L);
    opt("nu", c.nu);
    opt("gamma", c.gamma);
    opt("omega_true", c.omega_true);
    opt("window", c.window);
    opt("mode", c.mode);
    opt("budget_min", c.budget_min);
    opt("budget_max", c.budget_max);
    opt("n_e_max", c.n_e_max);
    opt("n_seeds", c.n_seeds);
    opt("repetitions", c.repetitions);
    opt("points", c.points);
    opt("delta_range", c.delta_range);
    opt("gamma_range", c.gamma_range);
    opt("t_range", c.t_range);
}

/// Accepts either a bare config or a previously emitted manifest (which
/// embeds the config under "config").
inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.contains("config") && j.contains("artifact_version")) j = j.at("config");
    return j.get<ExperimentConfig>();
}

namespace csv {

/// One CSV cell; doubles render with 17 significant digits and '.' decimal.
using Cell = std::variant<std::monostate, long long, double, std::string>;

inline std::string format(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(double v) const {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return buf;
        }
        std::string operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, cell);
}

class Writer {
public:
    explicit Writer(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open " + path.string());
    }
    void row(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << format(cells[i]);
        }
        out_ << '\n';
    }
    void header(const std::vector<std::string>& names) {
        std::vector<Cell> cells(names.begin(), names.end());
        row(cells);
    }

private:
    std::ofstream out_;
};

}  // namespace csv

struct RunResult {
    std::filesystem::path directory;
    std::filesystem::path csv_path;
    std::filesystem::path manifest_path;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::filesystem::path make_run_directory(const std::filesystem::path& out_root,
                                                const ExperimentConfig& cfg) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&tt, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);

    char hash[20];
    std::snprintf(hash, sizeof(hash), "%08llx",
                  static_cast<unsigned long long>(fnv1a(nlohmann::json(cfg).dump()) & 0xffffffffULL));

    std::filesystem::path dir = out_root / (std::string(stamp) + "-" + hash);
    for (int suffix = 1; std::filesystem::exists(dir); ++suffix)
        dir = out_root / (std::string(stamp) + "-" + hash + "-" + std::to_string(suffix));
    std::filesystem::create_directories(dir);
    return dir;
}

inline SchemePlan plan_from_config(const ExperimentConfig& c) {
    const double T = c.nu * c.t;
    if (c.scheme == "ladder") return geometric_ladder(c.p_levels, c.t, c.L, T, c.gamma);
    if (c.scheme == "combination")
        return combination_plan(c.n_u, c.n_e, c.p_copies, c.t, c.L, T, c.gamma);
    return combination_plan(c.n_u, 1, 0, c.t, c.L, T, c.gamma);  // uncorrelated
}

inline EvaluationOptions evaluation_options(const ExperimentConfig& c) {
    EvaluationOptions opts;
    opts.grid_points = c.grid_points;
    opts.mode = c.mode == "sampled" ? EvaluationOptions::Mode::Sampled
                                    : EvaluationOptions::Mode::Asymptotic;
    opts.seed = {c.seed, 0};
    if (!c.window.empty()) opts.window = PriorWindow{c.window[0], c.window[1], c.grid_points};
    return opts;
}

inline void run_crb_sweep(const ExperimentConfig& c, csv::Writer& out, nlohmann::json& extras) {
    out.header({"N", "gamma", "crb_uncorrelated", "crb_ghz", "crb_min"});
    const double t = c.interrogation_time, T = c.total_time;
    for (double gamma : c.gammas) {
        for (int n = c.n_min; n <= c.n_max; ++n) {
            ProbePulseConfig atom;
            atom.t_interrogation = t;
            atom.gamma = gamma;
            atom.omega0 = M_PI / (2.0 * t);  // quadrature working point
            const double unc = crb_uncertainty({atom, T, n});

            ProbePulseConfig ghz;
            ghz.n_atoms = n;
            ghz.correlation = Correlation::Ghz;
            ghz.t_interrogation = t;
            ghz.gamma = gamma;
            ghz.omega0 = M_PI / (2.0 * n * t);
            const double ent = crb_uncertainty({ghz, T, n});

            // best over the interrogation time; at gamma = 0 the optimum sits
            // on the t = T boundary
            double best;
            if (gamma > 0.0) {
                best = optimal_operating_point(n, Correlation::Uncorrelated, gamma, T)
                           .min_uncertainty;
            } else {
                ProbePulseConfig slow = atom;
                slow.t_interrogation = T;
                slow.omega0 = M_PI / (2.0 * T);
                best = crb_uncertainty({slow, T, n});
            }
            out.row({static_cast<long long>(n), gamma, unc, ent, best});
        }
    }
    extras["rows"] = static_cast<long long>(c.gammas.size()) * (c.n_max - c.n_min + 1);
}

inline void run_posterior(const ExperimentConfig& c, csv::Writer& out, nlohmann::json& extras) {
    const SchemePlan plan = plan_from_config(c);
    auto grid = evaluate_plan_posterior(plan, c.omega_true, evaluation_options(c));
    grid.normalize();
    const auto rep = report(grid);

    out.header({"omega0", "posterior_density"});
    const auto d = grid.density();
    for (int i = 0; i < grid.window().grid_points; ++i)
        out.row({grid.window().omega(i), d[i]});

    extras["estimate"] = rep.estimate;
    extras["half_width"] = rep.half_width;
    extras["posterior_std"] = rep.posterior_std;
    extras["ambiguous"] = rep.ambiguous;
    extras["peak_positions"] = rep.peak_positions;
    extras["total_atoms"] = plan.total_atoms;
}

inline void run_scheme_opt(const ExperimentConfig& c, csv::Writer& out, nlohmann::json& extras) {
    out.header({"N_T", "best_n_u", "best_n_e", "best_p", "posterior_std", "shotnoise_baseline",
                "ladder_std"});
    const double T = c.nu * c.t;
    long long fallbacks = 0;
    for (long long budget = c.budget_min; budget <= c.budget_max; ++budget) {
        const auto best = optimize_combination(budget, c.t, c.L, T, c.gamma, c.n_e_max);
        fallbacks += best.fallback ? 1 : 0;
        const auto pure = evaluate_plan(combination_plan(budget, 1, 0, c.t, c.L, T, c.gamma),
                                        M_PI / (2.0 * c.L));

        csv::Cell ladder_cell{};  // only exact 2^p - 1 budgets host a ladder
        if ((budget & (budget + 1)) == 0) {
            int levels = 0;
            for (long long b = budget; b > 0; b >>= 1) ++levels;
            const auto ladder = geometric_ladder(levels, c.t, c.L, T, c.gamma);
            ladder_cell = evaluate_plan(ladder, M_PI / (2.0 * c.L)).posterior_std;
        }
        out.row({budget, best.n_u, static_cast<long long>(best.n_e), best.p_copies,
                 best.report.posterior_std, pure.posterior_std, ladder_cell});
    }
    extras["fallbacks"] = fallbacks;
}

inline void run_monte_carlo(const ExperimentConfig& c, csv::Writer& out, nlohmann::json& extras) {
    ProbePulseConfig atom;
    atom.omega0 = c.omega_true;
    atom.t_interrogation = c.t;
    atom.gamma = c.gamma;

    PriorWindow window{0.0, M_PI / c.L, c.grid_points};
    if (!c.window.empty()) window = PriorWindow{c.window[0], c.window[1], c.grid_points};

    out.header({"seed_index", "count_excited", "estimate", "error", "half_width",
                "posterior_std", "ambiguous"});
    double sq_err = 0.0;
    for (int s = 0; s < c.n_seeds; ++s) {
        const auto rec =
            sample_record(atom, c.repetitions, {c.seed, static_cast<std::uint64_t>(s)});
        PosteriorGrid grid(window);
        grid.add(rec);
        const auto rep = report(grid);
        const double err = rep.estimate - c.omega_true;
        sq_err += err * err;
        out.row({static_cast<long long>(s), rec.count_excited, rep.estimate, err, rep.half_width,
                 rep.posterior_std, std::string(rep.ambiguous ? "true" : "false")});
    }
    const double rmse = std::sqrt(sq_err / c.n_seeds);
    const double crb =
        crb_uncertainty({atom, static_cast<double>(c.repetitions) * c.t, 1});
    extras["rmse"] = rmse;
    extras["crb"] = crb;
    extras["rmse_over_crb"] = rmse / crb;
}

inline void run_oracle_check(const ExperimentConfig& c, csv::Writer& out, nlohmann::json& extras) {
    out.header({"delta", "gamma", "t", "p_closed_form", "p_lindblad", "abs_dev"});
    const TrialSeed key{c.seed, 0};
    double max_dev = 0.0;
    for (int i = 0; i < c.points; ++i) {
        const auto draw = [&](int slot, const std::vector<double>& range) {
            return range[0] +
                   (range[1] - range[0]) * rng::draw_unit(key, 3ULL * i + slot);
        };
        ProbePulseConfig cfg;
        cfg.omega0 = draw(0, c.delta_range);
        cfg.gamma = draw(1, c.gamma_range);
        cfg.t_interrogation = draw(2, c.t_range);
        const double closed = p_excited(cfg);
        const double oracle = lindblad_ramsey_oracle(cfg);
        const double dev = std::abs(closed - oracle);
        max_dev = std::max(max_dev, dev);
        out.row({cfg.omega0, cfg.gamma, cfg.t_interrogation, closed, oracle, dev});
    }
    extras["max_abs_dev"] = max_dev;
}

}  // namespace detail

/// Executes one experiment into a fresh run directory: data.csv plus a
/// run.json manifest embedding the resolved config. Identical config and
/// seed reproduce data.csv byte for byte.
inline RunResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_root) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    RunResult result;
    result.directory = detail::make_run_directory(out_root, config);
    result.csv_path = result.directory / "data.csv";
    result.manifest_path = result.directory / "run.json";

    nlohmann::json extras;
    {
        csv::Writer out(result.csv_path);
        switch (config.kind) {
            case ExperimentKind::CrbSweep: detail::run_crb_sweep(config, out, extras); break;
            case ExperimentKind::Posterior: detail::run_posterior(config, out, extras); break;
            case ExperimentKind::SchemeOpt: detail::run_scheme_opt(config, out, extras); break;
            case ExperimentKind::MonteCarlo: detail::run_monte_carlo(config, out, extras); break;
            case ExperimentKind::OracleCheck: detail::run_oracle_check(config, out, extras); break;
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest{{"artifact_version", kArtifactVersion},
                            {"kind", to_string(config.kind)},
                            {"config", config},
                            {"wall_time_s", wall},
                            {"outputs", {"data.csv"}},
                            {"extras", extras}};
    std::ofstream mout(result.manifest_path);
    mout << manifest.dump(2) << '\n';
    return result;
}

}  // namespace ramsey
