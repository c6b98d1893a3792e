#include "splitstream/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "splitstream/analytic.hpp"
#include "splitstream/arprocess.hpp"
#include "splitstream/errors.hpp"
#include "splitstream/io.hpp"
#include "splitstream/output.hpp"
#include "splitstream/protocol_sim.hpp"

namespace splitstream {

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// Distance measured in standard errors, with a floor for exact quantities.
bool within_sigma(double diff, double sigma, double k, double floor = 1e-9) {
    return std::abs(diff) <= k * std::max(sigma, floor);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

struct Runner {
    ValidationReport report;
    std::ostream* progress = nullptr;

    void run(const std::string& id, const std::string& name, std::uint64_t seed,
             const std::function<CheckResult()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = body();
        } catch (const std::exception& e) {
            r.verdict = Verdict::fail;
            r.measured = std::string("error: ") + e.what();
        }
        r.id = id;
        r.name = name;
        r.seed = seed;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (progress) *progress << format_line(r) << std::endl;
        report.rows.push_back(std::move(r));
    }
};

CheckResult verdict(bool ok, std::string measured, std::string tolerance) {
    CheckResult r;
    r.verdict = ok ? Verdict::pass : Verdict::fail;
    r.measured = std::move(measured);
    r.tolerance = std::move(tolerance);
    return r;
}

CheckResult skipped(std::string why) {
    CheckResult r;
    r.verdict = Verdict::skipped;
    r.measured = std::move(why);
    return r;
}

SplittingMeasure binary_measure(double p) {
    return derive_splitting_measure(BranchingLaw::fixed({p, 1.0 - p}));
}

SeriesParams params(std::uint64_t seed, int workers, std::int64_t paths = 100'000) {
    SeriesParams p;
    p.seed = seed;
    p.workers = workers;
    p.mc_paths = paths;
    return p;
}

constexpr std::int64_t kHorizon = 10'000'000;

// ---- acceptance criteria -------------------------------------------------

CheckResult static_exact_value(std::uint64_t seed, int workers) {
    const auto sym = SplittingMeasure::dirac(0.5);
    AnalyticModel model(sym, 0.0, 2, params(seed, workers));
    const double series = model.mean_size(2).value;
    const auto sim = estimate_mean_size(2, 2, ArrivalLaw::none(), BranchingLaw::fixed({0.5, 0.5}), 1'000'000,
                                        kDefaultNodeBudget, seed, workers);
    const bool ok = rel(series, 5.0) < 0.01 && within_sigma(sim.mean - 5.0, sim.std_error, 3.0);
    return verdict(ok, "series=" + num(series) + " sim=" + num(sim.mean) + "+-" + num(sim.std_error),
                   "series 1%; sim 3 se");
}

CheckResult static_constants(std::uint64_t seed, int workers) {
    struct Case {
        SplittingMeasure m;
        int d;
    };
    const Case cases[] = {{SplittingMeasure::dirac(0.5), 2}, {SplittingMeasure::dirac(0.5), 3},
                          {SplittingMeasure::dirac(1.0 / 3.0), 2}, {binary_measure(0.3), 2},
                          {binary_measure(0.3), 3}};
    bool ok = true;
    double worst_exact = 0.0;
    double worst_sigma = 0.0;
    for (const auto& c : cases) {
        AnalyticModel model(c.m, 0.0, c.d, params(seed, workers));
        const auto& C = model.constants();
        const double eg = c.m.mean_G();
        for (int j = 0; j <= c.d; ++j) {
            const double diff = j < c.d ? C.at(j) - eg : C.c_inf;
            const double se = j < c.d ? C.std_error(j) : C.c_inf_std_error();
            if (c.m.single_atom()) {
                worst_exact = std::max(worst_exact, std::abs(diff));
                ok = ok && std::abs(diff) < 1e-6;
            } else {
                worst_sigma = std::max(worst_sigma, std::abs(diff) / std::max(se, 1e-9));
                ok = ok && within_sigma(diff, se, 3.0);
            }
        }
    }
    return verdict(ok, "single-atom max|dev|=" + num(worst_exact) + " two-atom max|dev|/se=" + num(worst_sigma),
                   "1e-6 exact; 3 se");
}

CheckResult static_slope(std::uint64_t seed, int workers) {
    const auto sym = SplittingMeasure::dirac(0.5);
    const std::int64_t n = 4096;
    const auto sim = estimate_mean_size(n, 2, ArrivalLaw::none(), BranchingLaw::fixed({0.5, 0.5}), 10'000,
                                        kDefaultNodeBudget, seed, workers);
    AnalyticModel model(sym, 0.0, 2, params(seed, workers));
    const double a = sim.mean / static_cast<double>(n);
    const double b = (model.mean_size(2 * n).value - model.mean_size(n).value) / static_cast<double>(n);
    const double c = model.asymptotics(RenewalVariant::corrected).at(static_cast<double>(n));
    const double printed = model.asymptotics(RenewalVariant::as_printed).at(static_cast<double>(n));
    const bool agree = rel(a, b) < 0.03 && rel(a, c) < 0.03 && rel(b, c) < 0.03;
    const bool printed_rejected = rel(printed, a) >= 0.03 && rel(printed, b) >= 0.03;
    return verdict(agree && printed_rejected,
                   "sim=" + num(a) + " series=" + num(b) + " corrected=" + num(c) + " as_printed=" + num(printed),
                   "pairwise 3%; as_printed must miss by 3%");
}

CheckResult renewal_oracle(std::uint64_t seed, int workers) {
    const auto sym = SplittingMeasure::dirac(0.5);
    const auto p = params(seed, workers);
    constexpr int kGrid = 32;
    std::vector<double> n1(kGrid), v1(kGrid), v2(kGrid);
    double mean = 0.0;
    for (int k = 0; k < kGrid; ++k) {
        n1[k] = std::round(std::exp2(16.0 + static_cast<double>(k) / kGrid));
        const auto n = static_cast<std::int64_t>(n1[k]);
        v1[k] = e_series(sym, 1, n, p).value / n1[k];
        v2[k] = e_series(sym, 1, 2 * n, p).value / (2.0 * n1[k]);
        mean += v1[k] / kGrid;
    }
    // Remove the O(1/n) drift: v(n) - v(2n) = b/(2n) for a pure b/n term.
    double b = 0.0;
    for (int k = 0; k < kGrid; ++k) b += 2.0 * n1[k] * (v1[k] - v2[k]) / kGrid;
    int peak1 = 0;
    int peak2 = 0;
    for (int k = 1; k < kGrid; ++k) {
        if (v1[k] - b / n1[k] > v1[peak1] - b / n1[peak1]) peak1 = k;
        if (v2[k] - b / (2 * n1[k]) > v2[peak2] - b / (2 * n1[peak2])) peak2 = k;
    }
    const int shift = std::min(std::abs(peak1 - peak2), kGrid - std::abs(peak1 - peak2));
    const double target = 1.0 / std::log(2.0);
    const bool ok = rel(mean, target) < 0.01 && shift <= 1;
    return verdict(ok,
                   "period mean=" + num(mean) + " 1/log2=" + num(target) + " peaks=" + std::to_string(peak1) + "/" +
                       std::to_string(peak2) + " of " + std::to_string(kGrid),
                   "1%; peak shift <= 1 grid step");
}

CheckResult fluctuation_mean() {
    const SplittingMeasure measures[] = {SplittingMeasure::dirac(0.5), SplittingMeasure({{0.5, 0.5}, {0.25, 0.5}})};
    double worst = 0.0;
    for (const auto& m : measures) {
        for (int i = 1; i <= 2; ++i) {
            for (auto v : {RenewalVariant::corrected, RenewalVariant::as_printed}) {
                constexpr int kPoints = 64;
                double s = 0.0;
                for (int k = 0; k < kPoints; ++k) s += fluctuation_F(m, i, static_cast<double>(k) / kPoints, v);
                worst = std::max(worst, std::abs(s / kPoints - renewal_slope(m, i, v)));
            }
        }
    }
    return verdict(worst < 1e-3, "max|mean F - slope|=" + num(worst), "1e-3");
}

CheckResult binary_closed_forms(std::uint64_t seed, int workers) {
    bool ok = true;
    double worst_k = 0.0;
    for (double pp : {0.5, 0.3}) {
        for (double lam : {0.1, 0.2}) {
            AnalyticModel model(binary_measure(pp), lam, 2, params(seed, workers));
            const auto& C = model.constants();
            const double ratio = C.at(1) / C.at(0);
            const double K = binary_K(pp, lam);
            const double se = C.ratio_std_error(1, 0);
            worst_k = std::max(worst_k, std::abs(ratio - K) / std::max(se, 1e-9 * K));
            ok = ok && within_sigma(ratio - K, se, 3.0, 1e-9 * K);
        }
    }
    double worst_l = 0.0;
    const auto b37 = binary_measure(0.3);
    for (double s : {0.05, 0.1, 0.5}) {
        const auto est = laplace_x_inf(b37, s, 1'000'000, 1e-10, seed, workers);
        const double closed = laplace_x_inf_binary_closed(0.3, s);
        worst_l = std::max(worst_l, std::abs(est.estimate - closed));
        ok = ok && within_sigma(est.estimate - closed, est.std_error, 3.0) && std::abs(est.estimate - closed) < 1e-3;
    }
    return verdict(ok, "max|C1/C0-K|/se=" + num(worst_k) + " max|laplace-closed|=" + num(worst_l),
                   "3 se; laplace 3 se and 1e-3");
}

CheckResult functional_residuals(std::uint64_t seed, int workers) {
    struct Case {
        SplittingMeasure m;
        double lam;
    };
    const Case cases[] = {{SplittingMeasure::dirac(0.5), 0.1}, {SplittingMeasure::dirac(0.5), 0.25},
                          {SplittingMeasure::dirac(1.0 / 3.0), 0.1}};
    bool ok = true;
    double worst_functional = 0.0;
    double worst_identity = 0.0;
    for (const auto& c : cases) {
        AnalyticModel model(c.m, c.lam, 2, params(seed, workers));
        for (int k = 0; k <= 20; ++k) {
            const double x = 0.5 * k;
            worst_functional = std::max(worst_functional, std::abs(model.functional_residual(x)) / std::abs(model.phi(x).value));
        }
        const auto& r = model.constants().residuals;
        worst_identity = std::max(worst_identity, std::abs(r.mean_identity) / std::max(r.mean_identity_std_error, 1e-9));
        ok = ok && within_sigma(r.mean_identity, r.mean_identity_std_error, 3.0);
    }
    ok = ok && worst_functional < 0.01;
    return verdict(ok, "max relative functional residual=" + num(worst_functional) + " max|E phi_dC|/se=" + num(worst_identity),
                   "1%; 3 se");
}

CheckResult boundary_conditions(std::uint64_t seed, int workers) {
    struct Case {
        SplittingMeasure m;
        int d;
    };
    const Case cases[] = {{SplittingMeasure::dirac(0.5), 2}, {SplittingMeasure::dirac(0.5), 3},
                          {SplittingMeasure::dirac(1.0 / 3.0), 3}, {binary_measure(0.3), 2},
                          {binary_measure(0.3), 3}};
    double worst = 0.0;
    for (const auto& c : cases) {
        AnalyticModel model(c.m, 0.1, c.d, params(seed, workers));
        for (int m = 1; m < c.d; ++m) worst = std::max(worst, std::abs(model.mean_size(m).value - 1.0));
    }
    return verdict(worst < 0.01, "max|E(R_m)-1|=" + num(worst), "1%");
}

CheckResult dynamic_cross_check(std::uint64_t seed, int workers) {
    AnalyticModel model(SplittingMeasure::dirac(0.5), 0.25, 2, params(seed, workers));
    bool ok = true;
    std::string measured;
    for (std::int64_t n : {64, 256}) {
        const auto s = model.mean_size(n);
        const auto sim = estimate_mean_size(n, 2, ArrivalLaw::poisson(0.25), BranchingLaw::fixed({0.5, 0.5}), 100'000,
                                            kDefaultNodeBudget, derive_seed(seed, static_cast<std::uint64_t>(n)), workers);
        const double comb = std::hypot(s.std_error, sim.std_error);
        ok = ok && sim.trusted() && std::abs(s.value - sim.mean) <= 2.0 * comb;
        measured += "n=" + std::to_string(n) + ":" + num(s.value) + " vs " + num(sim.mean) + "+-" + num(sim.std_error) + " ";
    }
    measured.pop_back();
    return verdict(ok, measured, "2 combined se");
}

CheckResult stability_threshold(std::uint64_t seed, int workers) {
    const auto sym = SplittingMeasure::dirac(0.5);
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    const auto lc = find_lambda_c(sym, 2, params(seed, workers), 0.05, 1.0, 1e-5);
    const auto below = stability_probe(2, law, ArrivalLaw::poisson(lc.lambda_c - 0.03), 100'000, 20,
                                       derive_seed(seed, 1), workers);
    const auto above = stability_probe(2, law, ArrivalLaw::poisson(lc.lambda_c + 0.03), 100'000, 20,
                                       derive_seed(seed, 2), workers);
    bool ok = lc.lambda_c >= 0.30 && lc.lambda_c <= 0.40 && lc.jitter < 0.01 &&
              below.classification == Stability::stable && above.classification == Stability::unstable &&
              lc.lambda_c <= 1.0;

    // The first root never exceeds D - 1 on the other reference systems.
    struct Case {
        SplittingMeasure m;
        int d;
    };
    const Case cases[] = {{SplittingMeasure::dirac(0.5), 3}, {SplittingMeasure::dirac(1.0 / 3.0), 2},
                          {binary_measure(0.3), 2}};
    std::string roots;
    for (const auto& c : cases) {
        const auto r = find_lambda_c(c.m, c.d, params(seed, workers, 20'000), 0.01, c.d - 1.0, 1e-3);
        ok = ok && r.lambda_c <= c.d - 1.0;
        roots += " " + num(r.lambda_c);
    }
    return verdict(ok,
                   "lambda_c=" + num(lc.lambda_c) + " jitter=" + num(lc.jitter) + " probe(-0.03)=" +
                       to_string(below.classification) + " probe(+0.03)=" + to_string(above.classification) +
                       " other roots:" + roots,
                   "[0.30;0.40] jitter<0.01; root <= D-1");
}

CheckResult simulator_equivalence(std::uint64_t seed, int workers) {
    const auto law = BranchingLaw::fixed({0.5, 0.5});
    bool ok = true;
    double worst = 0.0;
    std::uint64_t stream = 0;
    for (std::int64_t n : {2, 10}) {
        for (double lam : {0.0, 0.2}) {
            const auto arr = lam > 0.0 ? ArrivalLaw::poisson(lam) : ArrivalLaw::none();
            const auto tree = estimate_mean_size(n, 2, arr, law, 100'000, kDefaultNodeBudget, derive_seed(seed, stream++), workers);
            const auto hit = estimate_hitting_time(n, 2, arr, law, 100'000, kHorizon, derive_seed(seed, stream++), workers);
            const double zm = std::abs(tree.mean - hit.mean) / std::hypot(tree.std_error, hit.std_error);
            const double zv = std::abs(tree.variance - hit.variance) / std::hypot(tree.variance_std_error, hit.variance_std_error);
            worst = std::max({worst, zm, zv});
            ok = ok && zm <= 3.0 && zv <= 3.0 && tree.censored == 0 && hit.censored == 0;
        }
    }
    return verdict(ok, "max z over means and variances=" + num(worst), "3 combined se");
}

CheckResult regularization_invariance(std::uint64_t seed, int workers) {
    bool ok = true;
    double worst = 0.0;
    for (const auto& m : {SplittingMeasure::dirac(0.5), binary_measure(0.3)}) {
        auto on = params(seed, workers, 20'000);
        auto off = on;
        off.regularize = false;
        AnalyticModel a(m, 0.2, 2, on);
        AnalyticModel b(m, 0.2, 2, off);
        const auto& ca = a.constants();
        const auto& cb = b.constants();
        for (int j = 0; j <= 2; ++j) {
            const double va = j < 2 ? ca.at(j) : ca.c_inf;
            const double vb = j < 2 ? cb.at(j) : cb.c_inf;
            const double sa = j < 2 ? ca.std_error(j) : ca.c_inf_std_error();
            const double sb = j < 2 ? cb.std_error(j) : cb.c_inf_std_error();
            const double sigma = std::max(std::hypot(sa, sb), 1e-9 * std::abs(va));
            worst = std::max(worst, std::abs(va - vb) / sigma);
            ok = ok && std::abs(va - vb) <= 3.0 * sigma;
        }
    }
    const double tol = 1e-4;
    auto on = params(seed, workers);
    auto off = on;
    off.regularize = false;
    const auto ra = find_lambda_c(SplittingMeasure::dirac(0.5), 2, on, 0.05, 1.0, tol);
    const auto rb = find_lambda_c(SplittingMeasure::dirac(0.5), 2, off, 0.05, 1.0, tol);
    const double shift = std::abs(ra.lambda_c - rb.lambda_c);
    ok = ok && shift < tol;
    return verdict(ok, "max|C_on-C_off|/se=" + num(worst) + " root shift=" + num(shift),
                   "3 combined se; shift < " + num(tol));
}

}  // namespace

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::skipped: return "SKIP";
    }
    return "FAIL";
}

bool ValidationReport::ok() const {
    return std::none_of(rows.begin(), rows.end(), [](const CheckResult& r) { return r.verdict == Verdict::fail; });
}

std::string ValidationReport::to_csv(const Provenance& prov) const {
    CsvTable t(prov, {"id", "name", "verdict", "measured", "tolerance", "seed"});
    auto clean = [](std::string s) {
        std::replace(s.begin(), s.end(), ',', ';');
        return s;
    };
    for (const auto& r : rows) {
        t.add_row({r.id, clean(r.name), to_string(r.verdict), clean(r.measured), clean(r.tolerance), std::to_string(r.seed)});
    }
    std::ostringstream os;
    t.write(os);
    return os.str();
}

std::string format_line(const CheckResult& r) {
    std::ostringstream os;
    os << '[' << to_string(r.verdict) << "] " << r.id << ' ' << r.name << ": measured=" << r.measured;
    if (!r.tolerance.empty()) os << " tolerance=" << r.tolerance;
    char t[32];
    std::snprintf(t, sizeof t, "%.1f", r.seconds);
    os << " seed=" << r.seed << " (" << t << "s)";
    return os.str();
}

ValidationReport run_acceptance_suite(const SuiteOptions& opt) {
    Runner run;
    run.progress = opt.progress;
    const int w = opt.workers;
    auto want = [&](int id) { return opt.only.empty() || opt.only.count(id) > 0; };
    auto seed_for = [&](int id) { return derive_seed(opt.seed, static_cast<std::uint64_t>(id)); };

    struct Item {
        int id;
        const char* name;
        std::function<CheckResult(std::uint64_t)> body;
    };
    const Item items[] = {
        {1, "static exact value", [&](std::uint64_t s) { return static_exact_value(s, w); }},
        {2, "static constants", [&](std::uint64_t s) { return static_constants(s, w); }},
        {3, "static slope three routes", [&](std::uint64_t s) { return static_slope(s, w); }},
        {4, "renewal oracle", [&](std::uint64_t s) { return renewal_oracle(s, w); }},
        {5, "fluctuation mean", [&](std::uint64_t) { return fluctuation_mean(); }},
        {6, "binary closed forms", [&](std::uint64_t s) { return binary_closed_forms(s, w); }},
        {7, "functional-equation residuals", [&](std::uint64_t s) { return functional_residuals(s, w); }},
        {8, "boundary conditions", [&](std::uint64_t s) { return boundary_conditions(s, w); }},
        {9, "dynamic cross-check", [&](std::uint64_t s) { return dynamic_cross_check(s, w); }},
        {10, "stability threshold", [&](std::uint64_t s) { return stability_threshold(s, w); }},
        {11, "simulator equivalence", [&](std::uint64_t s) { return simulator_equivalence(s, w); }},
        {12, "regularization invariance", [&](std::uint64_t s) { return regularization_invariance(s, w); }},
    };
    for (const auto& it : items) {
        if (!want(it.id)) continue;
        const auto s = seed_for(it.id);
        run.run("C" + std::to_string(it.id), it.name, s, [&] { return it.body(s); });
    }
    return run.report;
}

ValidationReport run_validate(const ExperimentConfig& cfg, std::ostream* progress) {
    check_config(cfg);
    Runner run;
    run.progress = progress;
    const auto measure = config_measure(cfg);
    const std::optional<BranchingLaw> law =
        cfg.law.empty() ? std::nullopt : std::optional<BranchingLaw>(load_law(cfg.law));
    const auto arrivals = ArrivalLaw::parse(cfg.arrivals);
    const bool poisson = arrivals.kind() == ArrivalLaw::Kind::poisson || arrivals.is_none();
    const double lam = arrivals.rate();
    const int D = cfg.d;
    const int w = cfg.series.workers;
    SeriesParams p = cfg.series;
    p.seed = cfg.seed;

    run.run("V1", "measure moments", cfg.seed, [&] {
        const double direct = law ? law->mean_branching() : measure.mean_G();
        return verdict(std::abs(direct - measure.mean_G()) < 1e-9,
                       "E(G) law=" + num(direct) + " measure=" + num(measure.mean_G()), "1e-9");
    });

    std::optional<AnalyticModel> model;
    std::string why_skipped;
    if (!poisson) {
        why_skipped = "analytics need Poisson arrivals";
    } else {
        model.emplace(measure, lam, D, p);
    }
    run.run("V2", "solve constants", cfg.seed, [&] {
        if (!model) return skipped(why_skipped);
        try {
            const auto& C = model->constants();
            return verdict(true, "C_inf=" + num(C.c_inf) + " det=" + num(det_M(model->matrix())), "det above floor");
        } catch (const SingularNearLambdaC& e) {
            why_skipped = "SingularNearLambdaC";
            model.reset();
            return skipped(e.what());
        }
    });
    auto analytic = [&](const std::string& id, const std::string& name, const std::function<CheckResult()>& body) {
        run.run(id, name, cfg.seed, [&] { return model ? body() : skipped(why_skipped); });
    };

    analytic("V3", "boundary conditions", [&] {
        if (D < 2) return skipped("no boundary sizes when D = 1");
        double worst = 0.0;
        for (int m = 1; m < D; ++m) worst = std::max(worst, std::abs(model->mean_size(m).value - 1.0));
        return verdict(worst < 0.01, "max|E(R_m)-1|=" + num(worst), "1%");
    });
    analytic("V4", "static constants", [&] {
        if (lam != 0.0) return skipped("lambda > 0");
        const auto& C = model->constants();
        bool ok = true;
        double worst = 0.0;
        for (int j = 0; j <= D; ++j) {
            const double diff = j < D ? C.at(j) - measure.mean_G() : C.c_inf;
            const double se = j < D ? C.std_error(j) : C.c_inf_std_error();
            worst = std::max(worst, std::abs(diff));
            ok = ok && (measure.single_atom() ? std::abs(diff) < 1e-6 : within_sigma(diff, se, 3.0));
        }
        return verdict(ok, "max|dev|=" + num(worst), measure.single_atom() ? "1e-6" : "3 se");
    });
    analytic("V5", "mean identity residual", [&] {
        const auto& r = model->constants().residuals;
        return verdict(within_sigma(r.mean_identity, r.mean_identity_std_error, 3.0),
                       "E phi_dC=" + num(r.mean_identity) + "+-" + num(r.mean_identity_std_error), "3 se");
    });
    analytic("V6", "functional-equation residual", [&] {
        double worst = 0.0;
        for (int k = 0; k <= 20; ++k) {
            const double x = 0.5 * k;
            worst = std::max(worst, std::abs(model->functional_residual(x)) / std::abs(model->phi(x).value));
        }
        return verdict(worst < 0.01, "max relative residual=" + num(worst), "1%");
    });
    analytic("V7", "binary closed form", [&] {
        if (!law || law->branches().size() != 1 || law->branches()[0].g != 2 || law->branches()[0].weight_law.size() != 1 ||
            D != 2 || lam <= 0.0)
            return skipped("needs a fixed binary split, D = 2 and lambda > 0");
        const double pp = law->branches()[0].weight_law[0].v[0];
        const auto& C = model->constants();
        const double K = binary_K(pp, lam);
        const double ratio = C.at(1) / C.at(0);
        return verdict(within_sigma(ratio - K, C.ratio_std_error(1, 0), 3.0, 1e-9 * K),
                       "C1/C0=" + num(ratio) + " K=" + num(K), "3 se");
    });
    analytic("V8", "series vs simulation", [&] {
        if (!law) return skipped("needs a branching law");
        bool ok = true;
        std::string measured;
        std::uint64_t stream = 0;
        for (std::int64_t n : {static_cast<std::int64_t>(std::max(D, 2)), std::int64_t{64}}) {
            const auto s = model->mean_size(n);
            const auto sim = estimate_mean_size(n, D, arrivals, *law, cfg.trials, kDefaultNodeBudget,
                                                derive_seed(cfg.seed, 100 + stream++), w);
            const double comb = std::hypot(s.std_error, sim.std_error);
            ok = ok && sim.trusted() && std::abs(s.value - sim.mean) <= 2.0 * std::max(comb, 1e-9);
            measured += "n=" + std::to_string(n) + ":" + num(s.value) + " vs " + num(sim.mean) + "+-" + num(sim.std_error) + " ";
        }
        measured.pop_back();
        return verdict(ok, measured, "2 combined se");
    });
    analytic("V9", "regularization invariance", [&] {
        SeriesParams off = p;
        off.regularize = !p.regularize;
        AnalyticModel other(measure, lam, D, off);
        const auto& a = model->constants();
        const auto& b = other.constants();
        double worst = 0.0;
        bool ok = true;
        for (int j = 0; j <= D; ++j) {
            const double va = j < D ? a.at(j) : a.c_inf;
            const double vb = j < D ? b.at(j) : b.c_inf;
            const double sa = j < D ? a.std_error(j) : a.c_inf_std_error();
            const double sb = j < D ? b.std_error(j) : b.c_inf_std_error();
            const double sigma = std::max(std::hypot(sa, sb), 1e-9 * std::abs(va));
            worst = std::max(worst, std::abs(va - vb) / sigma);
            ok = ok && std::abs(va - vb) <= 3.0 * sigma;
        }
        return verdict(ok, "max|C_on-C_off|/se=" + num(worst), "3 combined se");
    });
    analytic("V10", "slope agreement", [&] {
        if (lam != 0.0 || D < 2) return skipped("checked for the static system with D >= 2");
        const std::int64_t n = 4096;
        const double series = (model->mean_size(2 * n).value - model->mean_size(n).value) / static_cast<double>(n);
        const double asym = model->asymptotics(RenewalVariant::corrected).at(static_cast<double>(n));
        return verdict(rel(series, asym) < 0.03, "series=" + num(series) + " asymptotic=" + num(asym), "3%");
    });

    run.run("V11", "hitting-time identity", cfg.seed, [&] {
        if (!law) return skipped("needs a branching law");
        const std::int64_t n = std::max<std::int64_t>(10, D);
        const auto tree = estimate_mean_size(n, D, arrivals, *law, cfg.trials, kDefaultNodeBudget, derive_seed(cfg.seed, 200), w);
        const auto hit = estimate_hitting_time(n, D, arrivals, *law, cfg.trials, kHorizon, derive_seed(cfg.seed, 201), w);
        if (!tree.trusted() || !hit.trusted()) return skipped("too many censored runs");
        const double zm = std::abs(tree.mean - hit.mean) / std::max(std::hypot(tree.std_error, hit.std_error), 1e-12);
        return verdict(zm <= 3.0, "tree=" + num(tree.mean) + " stack=" + num(hit.mean), "3 combined se");
    });
    run.run("V12", "stability probe", cfg.seed, [&] {
        if (!law) return skipped("needs a branching law");
        const auto rep = stability_probe(D, *law, arrivals, cfg.probe_horizon, cfg.probe_reps, derive_seed(cfg.seed, 300), w);
        if (!poisson) return skipped(std::string("classified ") + to_string(rep.classification));
        const bool solved = why_skipped.empty();
        const Stability expected = solved ? Stability::stable : Stability::unstable;
        return verdict(rep.classification == expected,
                       std::string(to_string(rep.classification)) + " drift=" + num(rep.drift) + "+-" + num(rep.drift_se),
                       std::string("expected ") + to_string(expected));
    });
    return run.report;
}

}  // namespace splitstream
