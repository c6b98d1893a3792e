// Command-line front end: one subcommand per library operation, CSV or JSON
// on stdout (or --out), and a provenance header on every output.

#include <cmath>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitstream/analytic.hpp"
#include "splitstream/arprocess.hpp"
#include "splitstream/config.hpp"
#include "splitstream/errors.hpp"
#include "splitstream/io.hpp"
#include "splitstream/output.hpp"
#include "splitstream/protocol_sim.hpp"
#include "splitstream/validate.hpp"

using namespace splitstream;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Accepts "100000" as well as "1e5".
std::int64_t parse_count(const std::string& text, const char* flag) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || v < 0 || v != std::floor(v) || v > 9e18) throw std::invalid_argument(text);
        return static_cast<std::int64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string("--") + flag + " expects a nonnegative integer, got '" + text + "'");
    }
}

double parse_real(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string(what) + ": cannot parse '" + text + "'");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::pair<double, double> parse_bracket(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 2) throw ConfigError("--bracket expects lo:hi, got '" + s + "'");
    return {parse_real(parts[0], "--bracket"), parse_real(parts[1], "--bracket")};
}

std::vector<double> parse_grid(const std::string& s) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("--lambda-grid expects start:stop:step, got '" + s + "'");
    const double a = parse_real(parts[0], "--lambda-grid");
    const double b = parse_real(parts[1], "--lambda-grid");
    const double h = parse_real(parts[2], "--lambda-grid");
    if (!(h > 0.0) || b < a) throw ConfigError("--lambda-grid needs step > 0 and stop >= start");
    std::vector<double> g;
    const auto steps = static_cast<std::int64_t>(std::floor((b - a) / h + 1e-9));
    for (std::int64_t k = 0; k <= steps; ++k) g.push_back(a + static_cast<double>(k) * h);
    return g;
}

std::vector<std::int64_t> parse_counts(const std::string& s, const char* flag) {
    std::vector<std::int64_t> out;
    for (const auto& p : split(s, ',')) out.push_back(parse_count(p, flag));
    if (out.empty()) throw ConfigError(std::string("--") + flag + " is empty");
    return out;
}

// Flags shared by every subcommand; values override the config file.
struct Common {
    std::string config;
    std::string law;
    std::string measure;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::string out;
    std::optional<int> d;
    std::optional<std::string> kmax;
    std::optional<std::string> paths;
    bool no_regularize = false;

    ExperimentConfig resolve() const {
        ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
        if (config.empty()) cfg.seed = default_seed(1);
        if (!law.empty()) {
            cfg.law = law;
            cfg.measure.clear();
        }
        if (!measure.empty()) {
            cfg.measure = measure;
            if (law.empty()) cfg.law.clear();
        }
        if (seed) cfg.seed = *seed;
        if (d) cfg.d = *d;
        if (kmax) cfg.series.k_max = static_cast<int>(parse_count(*kmax, "kmax"));
        if (paths) cfg.series.mc_paths = parse_count(*paths, "paths");
        if (no_regularize) cfg.series.regularize = false;
        cfg.series.workers = workers;
        cfg.series.seed = cfg.seed;
        if (cfg.d < 1) throw ConfigError("--d must be at least 1");
        return cfg;
    }
};

void add_common(CLI::App* app, Common& c, bool analytic) {
    app->add_option("--config", c.config, "Experiment config (JSON)");
    app->add_option("--law", c.law, "Branching law file (JSON)");
    app->add_option("--measure", c.measure, "Splitting measure or branching law file (JSON)");
    app->add_option("--seed", c.seed, "Master seed (default: SPLITSTREAM_SEED or 1)");
    app->add_option("--workers", c.workers, "Worker threads (0: all cores); results do not depend on it");
    app->add_option("--out", c.out, "Output file (default: stdout)");
    app->add_option("--d", c.d, "Splitting threshold D");
    if (analytic) {
        app->add_option("--kmax", c.kmax, "Series depth (0: automatic)");
        app->add_option("--paths", c.paths, "Monte Carlo weight paths");
        app->add_flag("--no-regularize", c.no_regularize, "Disable tail regularization");
    }
}

Provenance provenance(const std::string& cmd, const ExperimentConfig& cfg, json extra) {
    json doc = {{"command", cmd}, {"config", cfg.to_json()}, {"args", std::move(extra)}};
    return Provenance{cmd, cfg.seed, fnv1a_hex(doc.dump())};
}

std::string table_text(const CsvTable& t) {
    std::ostringstream os;
    t.write(os);
    return os.str();
}

double lambda_from(const std::optional<double>& flag, const ExperimentConfig& cfg) {
    if (flag) {
        if (!(*flag >= 0.0)) throw ConfigError("--lambda must be nonnegative");
        return *flag;
    }
    const auto a = ArrivalLaw::parse(cfg.arrivals);
    if (a.kind() != ArrivalLaw::Kind::poisson && !a.is_none())
        throw ConfigError("analytic commands need Poisson arrivals or --lambda");
    return a.rate();
}

std::optional<double> binary_closed(const SplittingMeasure& m, double s) {
    if (m.single_atom() && std::abs(m.atoms()[0].w - 0.5) < 1e-12) return laplace_x_inf_symmetric(s);
    if (m.size() == 2) {
        const auto& a = m.atoms();
        if (std::abs(a[0].w + a[1].w - 1.0) < 1e-12 && std::abs(a[0].q - a[0].w) < 1e-12) {
            if (s == 0.0) return 1.0;
            return laplace_x_inf_binary_closed(a[0].w, s);
        }
    }
    return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic splitting-tree algorithms: simulation and analytic properties", "splitstream"};
    app.set_version_flag("--version", SPLITSTREAM_VERSION);
    app.require_subcommand(1);

    Common c;
    std::string arrivals;
    std::string n_text;
    std::string trials_text;
    std::string budget_text;
    std::string method = "tree";
    std::string grid;
    std::string horizon_text;
    int reps = 0;
    std::optional<double> lam;
    double s_value = 0.1;
    std::string samples_text = "1000000";
    std::string bracket = "0.05:1";
    double tol = 1e-4;
    std::string n_grid;
    std::string variant_text = "corrected";
    int points = 64;
    bool acceptance = false;
    std::string only;

    auto* derive = app.add_subcommand("derive-measure", "Splitting measure and moments of a branching law");
    add_common(derive, c, false);
    auto* check = app.add_subcommand("check", "Assumption report of a splitting measure");
    add_common(check, c, false);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo mean tree size");
    add_common(simulate, c, false);
    simulate->add_option("--arrivals", arrivals, "none | poisson:<rate> | deterministic:<a> | pmf:<v:p,...>");
    simulate->add_option("--n", n_text, "Initial group size(s), comma separated")->required();
    simulate->add_option("--trials", trials_text, "Independent trials");
    simulate->add_option("--budget", budget_text, "Node budget (tree) or slot horizon (stack)");
    simulate->add_option("--method", method, "tree | stack")->check(CLI::IsMember({"tree", "stack"}));
    auto* probe = app.add_subcommand("probe", "Empirical stability of the stack chain");
    add_common(probe, c, false);
    probe->add_option("--arrivals", arrivals, "Arrival law when no grid is given");
    probe->add_option("--lambda-grid", grid, "Poisson rates start:stop:step");
    probe->add_option("--horizon", horizon_text, "Slots per replication");
    probe->add_option("--reps", reps, "Replications");
    auto* xinf = app.add_subcommand("xinf", "Laplace transform of the stationary perpetuity");
    add_common(xinf, c, false);
    xinf->add_option("--s", s_value, "Argument s >= 0");
    xinf->add_option("--samples", samples_text, "Monte Carlo samples");
    auto* solve = app.add_subcommand("solve", "Constants C, C_inf and diagnostics (JSON)");
    add_common(solve, c, true);
    solve->add_option("--lambda", lam, "Poisson arrival rate");
    auto* lambda_c = app.add_subcommand("lambda-c", "First root of det M_lambda");
    add_common(lambda_c, c, true);
    lambda_c->add_option("--bracket", bracket, "lo:hi");
    lambda_c->add_option("--tol", tol, "Bisection tolerance");
    auto* mean_size = app.add_subcommand("mean-size", "Exact expected tree sizes from the series");
    add_common(mean_size, c, true);
    mean_size->add_option("--lambda", lam, "Poisson arrival rate");
    mean_size->add_option("--n-grid", n_grid, "Sizes, comma separated")->required();
    auto* asym = app.add_subcommand("asymptotics", "Linear growth slope or its periodic fluctuation");
    add_common(asym, c, true);
    asym->add_option("--lambda", lam, "Poisson arrival rate");
    asym->add_option("--variant", variant_text, "corrected | as_printed");
    asym->add_option("--points", points, "Samples of x in [0, 1) for arithmetic measures");
    auto* validate = app.add_subcommand("validate", "Pass/fail checks for a configured system");
    add_common(validate, c, true);
    validate->add_option("--arrivals", arrivals, "Arrival law override");
    validate->add_flag("--acceptance", acceptance, "Run the fixed end-to-end acceptance criteria instead");
    validate->add_option("--only", only, "Acceptance criteria to run, comma separated ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        ExperimentConfig cfg = c.resolve();
        if (!arrivals.empty()) cfg.arrivals = arrivals;
        const int workers = c.workers;

        if (*derive) {
            const auto law = config_law(cfg);
            const auto m = derive_splitting_measure(law);
            const auto mm = measure_moments(m);
            CsvTable t(provenance("derive-measure", cfg, law_to_json(law)), {"w", "q", "mean_G", "mean_abs_log_w", "mean_w"});
            for (const auto& a : m.atoms()) {
                t.add_row({CsvTable::cell(a.w), CsvTable::cell(a.q), CsvTable::cell(mm.mean_G),
                           CsvTable::cell(mm.mean_abs_log_w), CsvTable::cell(mm.mean_w)});
            }
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*check) {
            const auto m = config_measure(cfg);
            const auto r = validate_assumptions(m);
            CsvTable t(provenance("check", cfg, measure_to_json(m)),
                       {"delta", "h2_value", "span", "mean_abs_log_w", "mean_G"});
            t.add_row({CsvTable::cell(r.delta), CsvTable::cell(r.h2_value), r.span ? CsvTable::cell(*r.span) : "absent",
                       CsvTable::cell(r.mean_abs_log_w), CsvTable::cell(m.mean_G())});
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*simulate) {
            const auto law = config_law(cfg);
            const auto arr = ArrivalLaw::parse(cfg.arrivals);
            const auto ns = parse_counts(n_text, "n");
            const std::int64_t trials = trials_text.empty() ? cfg.trials : parse_count(trials_text, "trials");
            if (trials < 1) throw ConfigError("--trials must be at least 1");
            const bool tree = method == "tree";
            const std::int64_t budget = budget_text.empty() ? kDefaultNodeBudget : parse_count(budget_text, "budget");
            if (budget < 1) throw ConfigError("--budget must be at least 1");
            CsvTable t(provenance("simulate", cfg,
                                  {{"n", ns}, {"trials", trials}, {"budget", budget}, {"method", method}}),
                       {"n", "mean", "std_error", "trials", "censored"});
            for (std::size_t i = 0; i < ns.size(); ++i) {
                const auto seed = derive_seed(cfg.seed, i);
                const auto e = tree ? estimate_mean_size(ns[i], cfg.d, arr, law, trials, budget, seed, workers)
                                    : estimate_hitting_time(ns[i], cfg.d, arr, law, trials, budget, seed, workers);
                t.add_row({CsvTable::cell(ns[i]), CsvTable::cell(e.mean), CsvTable::cell(e.std_error),
                           CsvTable::cell(e.trials), CsvTable::cell(e.censored)});
                if (!e.trusted()) std::cerr << "warning: n=" << ns[i] << " has " << e.censored << " censored runs; estimate untrusted\n";
            }
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*probe) {
            const auto law = config_law(cfg);
            const std::int64_t horizon = horizon_text.empty() ? cfg.probe_horizon : parse_count(horizon_text, "horizon");
            const int r = reps > 0 ? reps : cfg.probe_reps;
            std::vector<std::pair<double, ArrivalLaw>> runs;
            if (!grid.empty()) {
                for (double l : parse_grid(grid)) runs.emplace_back(l, ArrivalLaw::poisson(l));
            } else {
                const auto a = ArrivalLaw::parse(cfg.arrivals);
                runs.emplace_back(a.mean(), a);
            }
            CsvTable t(provenance("probe", cfg, {{"grid", grid}, {"horizon", horizon}, {"reps", r}}),
                       {"lambda", "drift", "drift_se", "min_late_empty_visits", "classification"});
            for (std::size_t i = 0; i < runs.size(); ++i) {
                const auto rep = stability_probe(cfg.d, law, runs[i].second, horizon, r, derive_seed(cfg.seed, i), workers);
                t.add_row({CsvTable::cell(runs[i].first), CsvTable::cell(rep.drift), CsvTable::cell(rep.drift_se),
                           CsvTable::cell(rep.min_late_empty_visits), to_string(rep.classification)});
            }
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*xinf) {
            const auto m = config_measure(cfg);
            const std::int64_t n = parse_count(samples_text, "samples");
            if (n < 1) throw ConfigError("--samples must be at least 1");
            if (!(s_value >= 0.0)) throw ConfigError("--s must be nonnegative");
            const auto e = laplace_x_inf(m, s_value, n, cfg.series.xinf_tol, cfg.seed, workers);
            const auto closed = binary_closed(m, s_value);
            CsvTable t(provenance("xinf", cfg, {{"s", s_value}, {"samples", n}}), {"s", "estimate", "std_error", "closed_form"});
            t.add_row({CsvTable::cell(s_value), CsvTable::cell(e.estimate), CsvTable::cell(e.std_error),
                       closed ? CsvTable::cell(*closed) : ""});
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*solve) {
            const auto m = config_measure(cfg);
            const double l = lambda_from(lam, cfg);
            AnalyticModel model(m, l, cfg.d, cfg.series);
            const auto& M = model.matrix();
            const auto& C = model.constants();
            json entries = json::array();
            json ses = json::array();
            for (int r = 0; r <= cfg.d; ++r) {
                json row = json::array();
                json se = json::array();
                for (int col = 0; col <= cfg.d; ++col) {
                    row.push_back(M.entries(r, col));
                    se.push_back(M.std_errors(r, col));
                }
                entries.push_back(row);
                ses.push_back(se);
            }
            json c_se = json::array();
            for (int j = 0; j < cfg.d; ++j) c_se.push_back(C.std_error(j));
            const json doc = {
                {"provenance", provenance("solve", cfg, {{"lambda", l}}).to_json()},
                {"lambda", l},
                {"d", cfg.d},
                {"k_max", model.k_max()},
                {"mc_paths", m.single_atom() ? 1 : cfg.series.mc_paths},
                {"C", C.c},
                {"C_inf", C.c_inf},
                {"C_std_errors", c_se},
                {"C_inf_std_error", C.c_inf_std_error()},
                {"residuals",
                 {{"mean_identity", C.residuals.mean_identity}, {"mean_identity_std_error", C.residuals.mean_identity_std_error}, {"boundary", C.residuals.boundary}}},
                {"matrix",
                 {{"entries", entries},
                  {"std_errors", ses},
                  {"det", det_M(M)},
                  {"det_std_error", M.det_std_error},
                  {"regularized", M.regularized},
                  {"warnings", M.warnings}}}};
            emit(c.out, dump_json(doc));
            return kExitOk;
        }
        if (*lambda_c) {
            const auto m = config_measure(cfg);
            const auto [lo, hi] = parse_bracket(bracket);
            const auto r = find_lambda_c(m, cfg.d, cfg.series, lo, hi, tol);
            CsvTable t(provenance("lambda-c", cfg, {{"bracket", bracket}, {"tol", tol}}),
                       {"lambda_c", "uncertainty", "jitter", "root_seed0", "root_seed1", "root_seed2"});
            t.add_row({CsvTable::cell(r.lambda_c), CsvTable::cell(r.uncertainty), CsvTable::cell(r.jitter),
                       CsvTable::cell(r.seed_roots[0]), CsvTable::cell(r.seed_roots[1]), CsvTable::cell(r.seed_roots[2])});
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*mean_size) {
            const auto m = config_measure(cfg);
            const double l = lambda_from(lam, cfg);
            const auto ns = parse_counts(n_grid, "n-grid");
            AnalyticModel model(m, l, cfg.d, cfg.series);
            CsvTable t(provenance("mean-size", cfg, {{"lambda", l}, {"n", ns}}),
                       {"n", "analytic", "std_error", "tail_bound", "trusted"});
            for (auto n : ns) {
                const auto v = model.mean_size(n);
                t.add_row({CsvTable::cell(n), CsvTable::cell(v.value), CsvTable::cell(v.std_error),
                           CsvTable::cell(v.tail_bound), v.trusted ? "true" : "false"});
            }
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*asym) {
            const auto m = config_measure(cfg);
            const double l = lambda_from(lam, cfg);
            const auto v = parse_variant(variant_text);
            if (points < 1) throw ConfigError("--points must be at least 1");
            AnalyticModel model(m, l, cfg.d, cfg.series);
            const auto a = model.asymptotics(v);
            const auto prov = provenance("asymptotics", cfg, {{"lambda", l}, {"variant", variant_text}, {"points", points}});
            if (!a.span || cfg.d < 2) {
                CsvTable t(prov, {"variant", "slope", "c_inf"});
                t.add_row({to_string(v), CsvTable::cell(a.mean_slope), CsvTable::cell(a.c_inf)});
                emit(c.out, table_text(t));
                return kExitOk;
            }
            std::vector<std::string> cols{"x"};
            for (int i = 1; i < cfg.d; ++i) cols.push_back("F_" + std::to_string(i));
            cols.push_back("slope");
            CsvTable t(prov, cols);
            for (int k = 0; k < points; ++k) {
                const double x = static_cast<double>(k) / points;
                std::vector<std::string> row{CsvTable::cell(x)};
                double slope = a.c_inf;
                for (int i = 1; i < cfg.d; ++i) {
                    const double f = fluctuation_F(m, i, x, v);
                    slope -= a.delta_c_means[static_cast<std::size_t>(i - 1)] * f;
                    row.push_back(CsvTable::cell(f));
                }
                row.push_back(CsvTable::cell(slope));
                t.add_row(row);
            }
            emit(c.out, table_text(t));
            return kExitOk;
        }
        if (*validate) {
            ValidationReport report;
            Provenance prov;
            if (acceptance) {
                SuiteOptions opt;
                opt.seed = cfg.seed;
                opt.workers = workers;
                for (const auto& id : split(only, ',')) {
                    if (!id.empty()) opt.only.insert(static_cast<int>(parse_count(id, "only")));
                }
                opt.progress = &std::cerr;
                report = run_acceptance_suite(opt);
                prov = provenance("validate", cfg, {{"acceptance", true}, {"only", only}});
            } else {
                report = run_validate(cfg, &std::cerr);
                prov = provenance("validate", cfg, {{"acceptance", false}});
            }
            std::string path = c.out;
            if (path.empty() && !cfg.outputs.empty()) path = cfg.outputs + "/validate.csv";
            emit(path, report.to_csv(prov));
            return report.ok() ? kExitOk : kExitFailure;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NoSignChange& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidLaw& e) {
        std::cerr << "invalid law: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DegenerateSplit& e) {
        std::cerr << "degenerate split: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}
