#include "splitstream/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "splitstream/arprocess.hpp"
#include "splitstream/errors.hpp"
#include "splitstream/kernels.hpp"
#include "splitstream/stats.hpp"

namespace splitstream {

using kernels::binom_upper_over_p;
using kernels::boundary_term;
using kernels::poisson_pmf;
using kernels::poisson_pmf_drop;
using kernels::row_d_term;

namespace {

void check_inputs(double lam, int D) {
    if (!(lam >= 0.0) || !std::isfinite(lam)) throw std::invalid_argument("lambda must be finite and nonnegative");
    if (D < 1) throw std::invalid_argument("D must be at least 1");
}

std::int64_t paths_for(const SplittingMeasure& m, const SeriesParams& p) {
    if (p.mc_paths < 1) throw std::invalid_argument("mc_paths must be at least 1");
    return m.single_atom() ? 1 : p.mc_paths;
}

int log_depth(double scale, double delta) {
    if (scale <= 1.0) return 0;
    return static_cast<int>(std::ceil(std::log(scale) / -std::log(delta)));
}

// Mean and standard error of per-path values.
std::pair<double, double> path_mean(const std::vector<double>& v) {
    if (v.size() == 1) return {v.front(), 0.0};
    const auto s = summarize(v);
    return {s.mean, s.std_error};
}

struct TermTotals {
    std::vector<double> totals;  // per path
    std::vector<double> last;    // per path, depth K term
    std::vector<double> prev;    // per path, depth K-1 term
};

// Runs body(pi_k, xstar_k, xinf) -> term over every path and depth 0..K.
template <class Term>
TermTotals sum_over_paths(const PathEnsemble& ens, int K, int workers, Term&& term) {
    const auto n = ens.size();
    TermTotals out;
    out.totals.resize(static_cast<std::size_t>(n));
    out.last.resize(static_cast<std::size_t>(n));
    out.prev.resize(static_cast<std::size_t>(n));
    parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> pi(static_cast<std::size_t>(K) + 1);
        std::vector<double> xs(static_cast<std::size_t>(K) + 1);
        for (std::int64_t path = lo; path < hi; ++path) {
            ens.trace(path, K, pi, xs);
            const double xinf = ens.xinf(path);
            CompensatedSum acc;
            double t_prev = 0.0;
            double t_last = 0.0;
            for (int k = 0; k <= K; ++k) {
                const double t = term(pi[static_cast<std::size_t>(k)], xs[static_cast<std::size_t>(k)], xinf);
                acc.add(t);
                t_prev = t_last;
                t_last = t;
            }
            const auto i = static_cast<std::size_t>(path);
            out.totals[i] = acc.value();
            out.last[i] = t_last;
            out.prev[i] = t_prev;
        }
    });
    return out;
}

SeriesValue finish_series(double base, const TermTotals& t, double delta) {
    SeriesValue v;
    const auto [mean, se] = path_mean(t.totals);
    v.value = base + mean;
    v.std_error = se;
    const double last = std::abs(path_mean(t.last).first);
    const double prev = std::abs(path_mean(t.prev).first);
    v.tail_bound = std::max(last, prev) * delta / (1.0 - delta);
    v.trusted = v.tail_bound <= 1e-6 * std::max(std::abs(v.value), 1e-300);
    return v;
}

std::string format_entry(int r, int c, double value, double se) {
    std::ostringstream os;
    os << "IllConditionedEstimate: M(" << r << "," << c << ") = " << value << " has standard error " << se;
    return os.str();
}

}  // namespace

const char* to_string(RenewalVariant v) { return v == RenewalVariant::as_printed ? "as_printed" : "corrected"; }

RenewalVariant parse_variant(const std::string& text) {
    if (text == "as_printed") return RenewalVariant::as_printed;
    if (text == "corrected") return RenewalVariant::corrected;
    throw ConfigError("unknown renewal variant '" + text + "' (expected as_printed or corrected)");
}

int auto_k_max(double delta, double target) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    int k = 1;
    while (std::pow(delta, k) / (1.0 - delta) >= target) ++k;
    return k;
}

int resolved_k_max(const SeriesParams& p, const SplittingMeasure& m) {
    if (p.k_max < 0) throw std::invalid_argument("k_max must be positive");
    return p.k_max > 0 ? p.k_max : auto_k_max(m.delta());
}

double ConstantsC::at(int j) const {
    if (j < 0) throw std::out_of_range("negative constant index");
    return j < static_cast<int>(c.size()) ? c[static_cast<std::size_t>(j)] : 0.0;
}

double ConstantsC::delta(int j) const { return at(j + 1) - at(j); }

double ConstantsC::std_error(int j) const {
    if (covariance.size() == 0 || j < 0 || j >= d) return 0.0;
    return std::sqrt(std::max(0.0, covariance(j, j)));
}

double ConstantsC::c_inf_std_error() const {
    if (covariance.size() == 0) return 0.0;
    return std::sqrt(std::max(0.0, covariance(d, d)));
}

double ConstantsC::ratio_std_error(int num, int den) const {
    if (covariance.size() == 0) return 0.0;
    const double a = at(num);
    const double b = at(den);
    const double ga = 1.0 / b;
    const double gb = -a / (b * b);
    const double var = ga * ga * covariance(num, num) + gb * gb * covariance(den, den) +
                       2.0 * ga * gb * covariance(num, den);
    return std::sqrt(std::max(0.0, var));
}

double phi_C(const ConstantsC& c, double y) {
    double s = 0.0;
    for (int m = 0; m < c.d; ++m) s += c.at(m) * poisson_pmf(m, y);
    return s;
}

double phi_delta_C(const ConstantsC& c, double y) {
    double s = 0.0;
    for (int j = 0; j < c.d; ++j) s += c.delta(j) * poisson_pmf(j, y);
    return s;
}

double delta_c_expectation(const ConstantsC& c, int i, double y) {
    double s = 0.0;
    for (int j = 0; i + j < c.d; ++j) s += c.delta(i + j) * poisson_pmf(j, y);
    return s;
}

RowEstimate row_D(const SplittingMeasure& m, double lam, int D, const SeriesParams& p) {
    check_inputs(lam, D);
    const PathEnsemble ens(m, paths_for(m, p), 1, p.xinf_tol, p.seed, p.workers);
    RowEstimate r;
    std::vector<double> vals(static_cast<std::size_t>(ens.size()));
    for (int l = 0; l < D; ++l) {
        for (std::int64_t i = 0; i < ens.size(); ++i) vals[static_cast<std::size_t>(i)] = row_d_term(l, lam * ens.xinf(i));
        const auto [mean, se] = path_mean(vals);
        r.values.push_back(mean);
        r.std_errors.push_back(se);
    }
    return r;
}

MatrixM assemble_matrix(const PathEnsemble& paths, const SplittingMeasure& m, double lam, int D, int k_max,
                        bool regularize, int workers) {
    check_inputs(lam, D);
    if (k_max < 1) throw std::invalid_argument("k_max must be at least 1");
    if (k_max > paths.depth()) throw std::invalid_argument("path ensemble is shallower than k_max");
    const int dim = D + 1;
    const auto n = paths.size();
    const double inv_mean_G = 1.0 / m.mean_G();
    const double reg = regularize ? 1.0 : 0.0;

    Eigen::MatrixXd values(n, dim * dim);
    parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> pi(static_cast<std::size_t>(k_max) + 1);
        std::vector<double> xs(static_cast<std::size_t>(k_max) + 1);
        std::vector<double> g(static_cast<std::size_t>(D));
        std::vector<CompensatedSum> acc(static_cast<std::size_t>(dim * dim));
        for (std::int64_t path = lo; path < hi; ++path) {
            paths.trace(path, k_max, pi, xs);
            const double y_inf = lam * paths.xinf(path);
            for (int l = 0; l < D; ++l) g[static_cast<std::size_t>(l)] = row_d_term(l, y_inf);
            std::fill(acc.begin(), acc.end(), CompensatedSum{});
            auto at = [&](int r, int c) -> CompensatedSum& { return acc[static_cast<std::size_t>(r + c * dim)]; };

            for (int k = 0; k <= k_max; ++k) {
                const double p = pi[static_cast<std::size_t>(k)];
                const double y = lam * xs[static_cast<std::size_t>(k)];
                for (int row = 1; row < D; ++row) {
                    for (int l = 0; l < D; ++l) {
                        at(row - 1, l).add(boundary_term(row, l, p, y) + reg * row * g[static_cast<std::size_t>(l)]);
                    }
                }
                if (lam > 0.0) {
                    for (int l = 0; l < D; ++l) {
                        at(D, l).add(lam * poisson_pmf_drop(l, y, lam * p) + reg * lam * g[static_cast<std::size_t>(l)]);
                    }
                }
            }
            for (int row = 1; row < D; ++row) at(row - 1, D).add(row);
            for (int l = 0; l < D; ++l) at(D - 1, l).add(g[static_cast<std::size_t>(l)]);
            at(D, 0).add(-inv_mean_G);
            at(D, D).add(lam);
            for (int e = 0; e < dim * dim; ++e) values(path, e) = acc[static_cast<std::size_t>(e)].value();
        }
    });

    MatrixM M;
    M.d = D;
    M.lam = lam;
    M.regularized = regularize;
    M.entries = Eigen::MatrixXd::Zero(dim, dim);
    M.std_errors = Eigen::MatrixXd::Zero(dim, dim);
    std::vector<double> col(static_cast<std::size_t>(n));
    for (int e = 0; e < dim * dim; ++e) {
        for (std::int64_t i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = values(i, e);
        const auto [mean, se] = path_mean(col);
        M.entries(e % dim, e / dim) = mean;
        M.std_errors(e % dim, e / dim) = se;
    }
    for (int r = 0; r < dim; ++r) {
        for (int c = 0; c < dim; ++c) {
            const double se = M.std_errors(r, c);
            if (se > 1e-12 && se > 0.1 * std::abs(M.entries(r, c))) {
                M.warnings.push_back(format_entry(r + 1, c, M.entries(r, c), se));
            }
        }
    }

    if (n > 1) {
        M.path_values = std::make_shared<const Eigen::MatrixXd>(std::move(values));
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(M.entries);
        if (lu.isInvertible()) {
            // d det / d M = det * M^{-T}; the per-path linearisation gives the SE.
            const Eigen::MatrixXd grad = lu.determinant() * lu.inverse().transpose();
            std::vector<double> lin(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (int e = 0; e < dim * dim; ++e) s += grad(e % dim, e / dim) * (*M.path_values)(i, e);
                lin[static_cast<std::size_t>(i)] = s;
            }
            M.det_std_error = summarize(lin).std_error;
        }
    }
    return M;
}

MatrixM assemble_matrix(const SplittingMeasure& m, double lam, int D, const SeriesParams& p) {
    const int K = resolved_k_max(p, m);
    const PathEnsemble ens(m, paths_for(m, p), K, p.xinf_tol, p.seed, p.workers);
    return assemble_matrix(ens, m, lam, D, K, p.regularize, p.workers);
}

double det_M(const MatrixM& M) { return M.entries.partialPivLu().determinant(); }

ConstantsC solve_constants(const MatrixM& M) {
    const int dim = M.d + 1;
    const double det = det_M(M);
    double scale = 1.0;
    for (int r = 0; r < dim; ++r) scale *= std::max(M.entries.row(r).norm(), 1e-300);
    const double floor = std::max(10.0 * M.det_std_error, 1e-12 * scale);
    if (!(det > floor)) {
        std::ostringstream os;
        os << "SingularNearLambdaC: det M = " << det << " (standard error " << M.det_std_error
           << ") at lambda = " << M.lam << "; lambda is at or beyond the first root, or too close to it";
        throw SingularNearLambdaC(os.str());
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M.entries);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs(M.d) = -1.0;
    const Eigen::VectorXd sol = lu.solve(rhs);

    ConstantsC C;
    C.d = M.d;
    C.lam = M.lam;
    C.c.assign(sol.data(), sol.data() + M.d);
    C.c_inf = sol(M.d);
    C.covariance = Eigen::MatrixXd::Zero(dim, dim);
    if (M.path_values) {
        // C = -M^{-1} e, so dC = -M^{-1} dM C per path.
        const Eigen::MatrixXd inv = lu.inverse();
        const auto& pv = *M.path_values;
        const auto n = pv.rows();
        Eigen::MatrixXd infl(n, dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::MatrixXd dM(dim, dim);
            for (int e = 0; e < dim * dim; ++e) dM(e % dim, e / dim) = pv(i, e) - M.entries(e % dim, e / dim);
            infl.row(i) = (-inv * (dM * sol)).transpose();
        }
        const Eigen::RowVectorXd mean = infl.colwise().mean();
        const Eigen::MatrixXd centered = infl.rowwise() - mean;
        C.covariance = (centered.transpose() * centered) / static_cast<double>(n - 1) / static_cast<double>(n);
    }
    return C;
}

namespace {

SeriesValue mean_size_on(const PathEnsemble& ens, const SplittingMeasure& m, double lam, int D, const ConstantsC& C,
                         std::int64_t n, int K, bool regularize, int workers) {
    if (n < 0) throw std::invalid_argument("n must be nonnegative");
    if (C.d != D) throw std::invalid_argument("constants were solved for another D");
    const double reg = regularize ? 1.0 : 0.0;
    const double nd = static_cast<double>(n);
    auto t = sum_over_paths(ens, K, workers, [&](double p, double xs, double xinf) {
        const double y = lam * xs;
        double term = reg * nd * delta_c_expectation(C, 0, lam * xinf);
        for (int i = 0; i < D; ++i) term -= delta_c_expectation(C, i, y) * binom_upper_over_p(n, i, p);
        return term;
    });
    return finish_series(1.0 + nd * C.c_inf, t, m.delta());
}

SeriesValue phi_on(const PathEnsemble& ens, const SplittingMeasure& m, double lam, const ConstantsC& C, double x,
                   int K, bool regularize, int workers) {
    if (!(x >= 0.0)) throw std::invalid_argument("x must be nonnegative");
    const double reg = regularize ? 1.0 : 0.0;
    auto t = sum_over_paths(ens, K, workers, [&](double p, double xs, double xinf) {
        if (x == 0.0) return 0.0;
        const double y = lam * xs;
        double term = reg * x * phi_delta_C(C, lam * xinf);
        for (int j = 0; j < C.d; ++j) term += x * C.at(j) * poisson_pmf_drop(j, y, p * x);
        return term;
    });
    return finish_series(1.0 + x * C.c_inf, t, m.delta());
}

}  // namespace

SeriesValue mean_size_series(const SplittingMeasure& m, double lam, int D, const ConstantsC& C, std::int64_t n,
                             const SeriesParams& p) {
    check_inputs(lam, D);
    const int K = resolved_k_max(p, m) + log_depth(static_cast<double>(n), m.delta());
    const PathEnsemble ens(m, paths_for(m, p), K, p.xinf_tol, p.seed, p.workers);
    return mean_size_on(ens, m, lam, D, C, n, K, p.regularize, p.workers);
}

SeriesValue eval_phi(const SplittingMeasure& m, double lam, const ConstantsC& C, double x, const SeriesParams& p) {
    check_inputs(lam, C.d);
    const int K = resolved_k_max(p, m) + log_depth(x, m.delta());
    const PathEnsemble ens(m, paths_for(m, p), K, p.xinf_tol, p.seed, p.workers);
    return phi_on(ens, m, lam, C, x, K, p.regularize, p.workers);
}

namespace {

ConstantsResiduals residuals_for(const PathEnsemble& ens, const SplittingMeasure& m, double lam, int D,
                                 const ConstantsC& C, const MatrixM& M, int K, const SeriesParams& p) {
    ConstantsResiduals r;
    // Independent X_inf draws on streams disjoint from the path ensemble.
    const XInfSampler sampler(m, p.xinf_tol);
    const std::int64_t n = m.single_atom() ? 1 : p.mc_paths;
    const auto xs = sample_x_inf_many(sampler, n, derive_seed(p.seed, 0x1de7), p.workers);
    std::vector<double> vals(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) vals[i] = phi_delta_C(C, lam * xs[i]);
    const auto [mean, se] = path_mean(vals);
    r.mean_identity = mean;
    // The solved C makes the ensemble version of the same average vanish, so
    // the difference also carries the ensemble's sampling error.
    double ens_se = 0.0;
    if (M.path_values) {
        std::vector<double> row(static_cast<std::size_t>(ens.size()));
        for (std::int64_t i = 0; i < ens.size(); ++i) row[static_cast<std::size_t>(i)] = phi_delta_C(C, lam * ens.xinf(i));
        ens_se = path_mean(row).second;
    }
    r.mean_identity_std_error = std::hypot(se, ens_se);
    for (int mm = 1; mm < D; ++mm) {
        r.boundary.push_back(mean_size_on(ens, m, lam, D, C, mm, K, p.regularize, p.workers).value - 1.0);
    }
    return r;
}

}  // namespace

ConstantsC solve_constants(const SplittingMeasure& m, double lam, int D, const SeriesParams& p) {
    AnalyticModel model(m, lam, D, p);
    return model.constants();
}

double binary_K(double p, double lam) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (!(lam > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (std::abs(p - 0.5) < 1e-12) {
        if (lam >= 0.5) throw PoleError("1/(1 - 2 lambda) has a pole at lambda = 1/2");
        return 1.0 / (1.0 - 2.0 * lam);
    }
    const double q = 1.0 - p;
    const double a = lam / p;
    const double b = lam / q;
    const double num = -std::exp(-a) * std::expm1(a - b);  // e^{-a} - e^{-b}
    const double den = a * std::exp(-a) - b * std::exp(-b);
    const double K = -num / den;
    if (den == 0.0 || !std::isfinite(K)) throw PoleError("denominator of K vanishes at this lambda");
    return K;
}

LambdaC find_lambda_c(const SplittingMeasure& m, int D, const SeriesParams& p, double lo, double hi, double tol) {
    if (D < 1) throw std::invalid_argument("D must be at least 1");
    if (!(lo >= 0.0 && hi > lo)) throw std::invalid_argument("bracket must satisfy 0 <= lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const int K = resolved_k_max(p, m);
    const std::uint64_t seeds[] = {p.seed, derive_seed(p.seed, 1), derive_seed(p.seed, 2)};

    LambdaC out;
    for (int s = 0; s < 3; ++s) {
        if (s > 0 && m.single_atom()) {
            // Deterministic paths: every seed gives the same root.
            out.seed_roots.push_back(out.seed_roots.front());
            continue;
        }
        const PathEnsemble ens(m, paths_for(m, p), K, p.xinf_tol, seeds[s], p.workers);
        auto f = [&](double lam) { return det_M(assemble_matrix(ens, m, lam, D, K, p.regularize, p.workers)); };
        double a = lo;
        double b = hi;
        double fa = f(a);
        const double fb = f(b);
        if (!(fa * fb < 0.0)) {
            std::ostringstream os;
            os << "NoSignChange: det M has the same sign at lambda = " << lo << " (" << fa << ") and " << hi << " ("
               << fb << "); widen the bracket or raise the number of paths";
            throw NoSignChange(os.str());
        }
        while (b - a > tol) {
            const double mid = 0.5 * (a + b);
            const double fm = f(mid);
            if ((fm < 0.0) == (fa < 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        out.seed_roots.push_back(0.5 * (a + b));
    }
    out.lambda_c = out.seed_roots.front();
    for (double r : out.seed_roots) out.jitter = std::max(out.jitter, std::abs(r - out.lambda_c));
    out.uncertainty = std::max(tol, out.jitter);
    return out;
}

AnalyticModel::AnalyticModel(SplittingMeasure m, double lam, int d, SeriesParams p)
    : measure_(std::move(m)), lam_(lam), d_(d), params_(p), k_max_(resolved_k_max(p, measure_)) {
    check_inputs(lam, d);
    paths_for(measure_, params_);
}

const PathEnsemble& AnalyticModel::ensemble(int depth) {
    if (!ensemble_ || ensemble_->depth() < depth) {
        const int want = std::max(depth, k_max_);
        ensemble_ = std::make_unique<PathEnsemble>(measure_, paths_for(measure_, params_), want, params_.xinf_tol,
                                                   params_.seed, params_.workers);
    }
    return *ensemble_;
}

const MatrixM& AnalyticModel::matrix() {
    if (!matrix_) {
        matrix_ = assemble_matrix(ensemble(k_max_), measure_, lam_, d_, k_max_, params_.regularize, params_.workers);
    }
    return *matrix_;
}

const ConstantsC& AnalyticModel::constants() {
    if (!constants_) {
        const MatrixM& M = matrix();
        ConstantsC C = solve_constants(M);
        C.residuals = residuals_for(ensemble(k_max_), measure_, lam_, d_, C, M, k_max_, params_);
        constants_ = std::move(C);
    }
    return *constants_;
}

void AnalyticModel::set_constants(ConstantsC c) {
    if (c.d != d_) throw std::invalid_argument("constants were solved for another D");
    constants_ = std::move(c);
}

SeriesValue AnalyticModel::mean_size(std::int64_t n) {
    return mean_size(n, k_max_ + log_depth(static_cast<double>(n), measure_.delta()));
}

SeriesValue AnalyticModel::mean_size(std::int64_t n, int k_max) {
    const ConstantsC& C = constants();
    return mean_size_on(ensemble(k_max), measure_, lam_, d_, C, n, k_max, params_.regularize, params_.workers);
}

SeriesValue AnalyticModel::phi(double x) {
    const ConstantsC& C = constants();
    const int K = k_max_ + log_depth(x, measure_.delta());
    return phi_on(ensemble(K), measure_, lam_, C, x, K, params_.regularize, params_.workers);
}

double AnalyticModel::functional_residual(double x) {
    double rhs = 0.0;
    for (const auto& a : measure_.atoms()) rhs += a.q / a.w * phi(lam_ + a.w * x).value;
    return phi(x).value - rhs - 1.0 + phi_C(constants(), x);
}

AsymptoticSlope AnalyticModel::asymptotics(RenewalVariant v) {
    return asymptotic_slope(measure_, lam_, d_, constants(), v, params_);
}

}  // namespace splitstream
