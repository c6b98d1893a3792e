#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "splitstream/analytic.hpp"
#include "splitstream/errors.hpp"
#include "splitstream/kernels.hpp"
#include "splitstream/stats.hpp"

namespace splitstream {

namespace {

// Above this many atom-multiplicity vectors e_series samples paths instead.
constexpr double kMaxCompositions = 5e6;

double composition_count(std::size_t atoms, int K) {
    double total = 0.0;
    for (int k = 0; k <= K; ++k) {
        total += std::exp(std::lgamma(k + static_cast<double>(atoms)) - std::lgamma(k + 1.0) -
                          std::lgamma(static_cast<double>(atoms)));
    }
    return total;
}

// Calls visit(log_prob, log_pi) for every multiplicity vector of size k.
void for_each_composition(const std::vector<double>& log_q, const std::vector<double>& log_w, int k,
                          const std::function<void(double, double)>& visit) {
    const std::size_t r = log_q.size();
    std::function<void(std::size_t, int, double, double)> rec = [&](std::size_t j, int left, double lp, double lpi) {
        if (j + 1 == r) {
            visit(lp + left * log_q[j] - std::lgamma(left + 1.0), lpi + left * log_w[j]);
            return;
        }
        for (int c = 0; c <= left; ++c) {
            rec(j + 1, left - c, lp + c * log_q[j] - std::lgamma(c + 1.0), lpi + c * log_w[j]);
        }
    };
    rec(0, k, std::lgamma(k + 1.0), 0.0);
}

double prefactor(const SplittingMeasure& m, RenewalVariant v) {
    const auto mm = measure_moments(m);
    const double base = 1.0 / mm.mean_abs_log_w;
    return v == RenewalVariant::corrected ? base : mm.mean_G * base;
}

}  // namespace

SeriesValue e_series(const SplittingMeasure& m, int i, std::int64_t n, const SeriesParams& p) {
    if (i < 0) throw std::invalid_argument("i must be nonnegative");
    SeriesValue out;
    if (static_cast<std::int64_t>(i) + 1 > n) return out;
    if (i == 0) throw NotApplicable("E_{0,n} diverges: every depth contributes about n");

    const double delta = m.delta();
    const int K = resolved_k_max(p, m) + (n > 1 ? static_cast<int>(std::ceil(std::log(static_cast<double>(n)) / -std::log(delta))) : 0);
    std::vector<double> terms(static_cast<std::size_t>(K) + 1, 0.0);

    if (composition_count(m.size(), K) <= kMaxCompositions) {
        std::vector<double> log_q;
        std::vector<double> log_w;
        for (const auto& a : m.atoms()) {
            log_q.push_back(std::log(a.q));
            log_w.push_back(std::log(a.w));
        }
        for (int k = 0; k <= K; ++k) {
            CompensatedSum acc;
            for_each_composition(log_q, log_w, k, [&](double lp, double lpi) {
                acc.add(std::exp(lp) * kernels::binom_upper_over_p(n, i, std::exp(lpi)));
            });
            terms[static_cast<std::size_t>(k)] = acc.value();
        }
        CompensatedSum total;
        for (double t : terms) total.add(t);
        out.value = total.value();
    } else {
        const PathEnsemble ens(m, p.mc_paths, K, p.xinf_tol, p.seed, p.workers);
        std::vector<double> per_path(static_cast<std::size_t>(ens.size()));
        std::vector<std::vector<double>> per_depth(2, std::vector<double>(per_path.size()));
        parallel_for(ens.size(), p.workers, [&](std::int64_t lo, std::int64_t hi) {
            std::vector<double> pi(static_cast<std::size_t>(K) + 1);
            std::vector<double> xs(static_cast<std::size_t>(K) + 1);
            for (std::int64_t path = lo; path < hi; ++path) {
                ens.trace(path, K, pi, xs);
                CompensatedSum acc;
                for (int k = 0; k <= K; ++k) acc.add(kernels::binom_upper_over_p(n, i, pi[static_cast<std::size_t>(k)]));
                per_path[static_cast<std::size_t>(path)] = acc.value();
                per_depth[0][static_cast<std::size_t>(path)] = kernels::binom_upper_over_p(n, i, pi[static_cast<std::size_t>(K - 1)]);
                per_depth[1][static_cast<std::size_t>(path)] = kernels::binom_upper_over_p(n, i, pi[static_cast<std::size_t>(K)]);
            }
        });
        const auto s = summarize(per_path);
        out.value = s.mean;
        out.std_error = s.std_error;
        terms[static_cast<std::size_t>(K - 1)] = summarize(per_depth[0]).mean;
        terms[static_cast<std::size_t>(K)] = summarize(per_depth[1]).mean;
    }
    const double last = std::max(std::abs(terms[static_cast<std::size_t>(K)]),
                                 K > 0 ? std::abs(terms[static_cast<std::size_t>(K - 1)]) : 0.0);
    out.tail_bound = last * delta / (1.0 - delta);
    out.trusted = out.tail_bound <= 1e-6 * std::max(std::abs(out.value), 1e-300);
    return out;
}

double renewal_slope(const SplittingMeasure& m, int i, RenewalVariant v) {
    if (i < 1) throw std::invalid_argument("renewal slope needs i >= 1");
    return prefactor(m, v) / i;
}

double fluctuation_F(const SplittingMeasure& m, int i, double x, RenewalVariant v) {
    if (i < 1) throw std::invalid_argument("fluctuation function needs i >= 1");
    const auto report = validate_assumptions(m);
    if (!report.span) throw NotArithmetic("-log W has no lattice span; the slope has a plain limit");
    const double xi = *report.span;
    const double fact = std::exp(std::lgamma(i + 1.0));

    // Outside [y_lo, y_hi] the integrand carries less than 1e-12 of mass.
    const double y_hi = boost::math::gamma_q_inv(static_cast<double>(i), std::min(1e-12 * i, 0.5));
    const double y_lo = std::pow(1e-14 * i * fact, 1.0 / i);

    // The fractional part jumps where log y / xi crosses x - j; between two
    // such points the integrand is e^{-xi (x - j)} y^i e^{-y} / i!.
    std::vector<double> cuts{y_lo, y_hi};
    const double j_lo = std::ceil(x - std::log(y_hi) / xi);
    const double j_hi = std::floor(x - std::log(y_lo) / xi);
    for (double j = j_lo; j <= j_hi; j += 1.0) {
        const double y = std::exp(xi * (x - j));
        if (y > y_lo && y < y_hi) cuts.push_back(y);
    }
    std::sort(cuts.begin(), cuts.end());

    CompensatedSum total;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c];
        const double b = cuts[c + 1];
        if (!(b > a)) continue;
        const double mid = std::sqrt(a * b);
        const double j = std::floor(x - std::log(mid) / xi);
        const double scale = std::exp(-xi * (x - j));
        auto f = [&](double y) { return std::exp(i * std::log(y) - y) / fact; };
        total.add(scale * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13));
    }
    return prefactor(m, v) * xi / -std::expm1(-xi) * total.value();
}

AsymptoticSlope asymptotic_slope(const SplittingMeasure& m, double lam, int D, const ConstantsC& C, RenewalVariant v,
                                 const SeriesParams& p) {
    if (C.d != D) throw std::invalid_argument("constants were solved for another D");
    const PathEnsemble ens(m, m.single_atom() ? 1 : p.mc_paths, 1, p.xinf_tol, p.seed, p.workers);

    AsymptoticSlope out;
    out.variant = v;
    out.c_inf = C.c_inf;
    out.mean_slope = C.c_inf;
    std::vector<double> vals(static_cast<std::size_t>(ens.size()));
    for (int i = 1; i < D; ++i) {
        for (std::int64_t k = 0; k < ens.size(); ++k) {
            vals[static_cast<std::size_t>(k)] = delta_c_expectation(C, i, lam * ens.xinf(k));
        }
        const double e = summarize(vals).mean;
        out.delta_c_means.push_back(e);
        out.mean_slope -= renewal_slope(m, i, v) * e;
    }
    out.span = validate_assumptions(m).span;
    if (out.span && D > 1) {
        const double xi = *out.span;
        auto means = out.delta_c_means;
        auto c_inf = out.c_inf;
        auto measure = m;
        out.at = [=](double n) {
            double s = c_inf;
            for (int i = 1; i < D; ++i) s -= means[static_cast<std::size_t>(i - 1)] * fluctuation_F(measure, i, std::log(n) / xi, v);
            return s;
        };
    } else {
        const double slope = out.mean_slope;
        out.at = [slope](double) { return slope; };
    }
    return out;
}

}  // namespace splitstream
