#include <cmath>

#include <doctest.h>

#include "splitstream/analytic.hpp"
#include "splitstream/errors.hpp"

using namespace splitstream;

namespace {

// Brute-force E_{i,n} for a single-atom measure: sum_k w^{-k} P(Binom(n, w^k) >= i + 1).
double e_direct(double w, int i, int n) {
    double total = 0.0;
    for (int k = 0; k < 200; ++k) {
        const double p = std::pow(w, k);
        if (p == 1.0) {
            total += n >= i + 1 ? 1.0 : 0.0;
            continue;
        }
        double tail = 0.0;
        for (int b = i + 1; b <= n; ++b) {
            tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(b + 1.0) - std::lgamma(n - b + 1.0) + b * std::log(p) +
                             (n - b) * std::log1p(-p));
        }
        total += tail / p;
    }
    return total;
}

}  // namespace

TEST_CASE("E_{i,n} against direct summation") {
    SeriesParams p;
    for (int n : {2, 7, 40}) {
        for (int i = 1; i < 3; ++i) {
            CHECK(e_series(SplittingMeasure::dirac(0.5), i, n, p).value == doctest::Approx(e_direct(0.5, i, n)).epsilon(1e-9));
        }
    }
    CHECK(e_series(SplittingMeasure::dirac(0.5), 3, 3, p).value == 0.0);
    CHECK_THROWS_AS(e_series(SplittingMeasure::dirac(0.5), 0, 10, p), NotApplicable);
}

TEST_CASE("two-atom E_{i,n} through its first-step equation") {
    // E_{i,n} = P(n >= i+1) + sum_j q_j / w_j E[E_{i, Binom(n, w_j)}]; verified at n = 6.
    const SplittingMeasure m({{0.3, 0.3}, {0.7, 0.7}});
    SeriesParams p;
    const int n = 6;
    const int i = 1;
    double rhs = 1.0;
    for (const auto& a : m.atoms()) {
        for (int b = i + 1; b <= n; ++b) {
            const double pb = std::exp(std::lgamma(n + 1.0) - std::lgamma(b + 1.0) - std::lgamma(n - b + 1.0) +
                                       b * std::log(a.w) + (n - b) * std::log1p(-a.w));
            rhs += a.q / a.w * pb * e_series(m, i, b, p).value;
        }
    }
    CHECK(e_series(m, i, n, p).value == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("E_{1,n}/n oscillates around the renewal limit") {
    SeriesParams p;
    const auto m = SplittingMeasure::dirac(0.5);
    const double limit = renewal_slope(m, 1, RenewalVariant::corrected);
    CHECK(limit == doctest::Approx(1.0 / std::log(2.0)));
    const double r = e_series(m, 1, 1 << 16, p).value / (1 << 16);
    CHECK(std::abs(r - limit) < 1e-4);
    CHECK(renewal_slope(m, 1, RenewalVariant::as_printed) == doctest::Approx(2.0 / std::log(2.0)));
}

TEST_CASE("period average of F_i is the renewal slope") {
    for (const auto& m : {SplittingMeasure::dirac(0.5), SplittingMeasure({{0.5, 0.5}, {0.25, 0.5}})}) {
        for (int i : {1, 2}) {
            double avg = 0.0;
            const int pts = 256;
            for (int k = 0; k < pts; ++k) avg += fluctuation_F(m, i, (k + 0.5) / pts, RenewalVariant::corrected);
            avg /= pts;
            CHECK(avg == doctest::Approx(renewal_slope(m, i, RenewalVariant::corrected)).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(fluctuation_F(SplittingMeasure({{0.3, 0.3}, {0.7, 0.7}}), 1, 0.0, RenewalVariant::corrected),
                    NotArithmetic);
}

TEST_CASE("F_1 tracks E_{1,n}/n along a period") {
    SeriesParams p;
    const auto m = SplittingMeasure::dirac(0.5);
    const double n0 = std::ldexp(1.0, 18);
    for (double x : {0.0, 0.25, 0.5, 0.75}) {
        const auto n = static_cast<std::int64_t>(std::llround(n0 * std::exp2(x)));
        const double lhs = e_series(m, 1, n, p).value / static_cast<double>(n);
        CHECK(lhs == doctest::Approx(fluctuation_F(m, 1, std::log(static_cast<double>(n)) / std::log(2.0), RenewalVariant::corrected))
                         .epsilon(1e-4));
    }
}

TEST_CASE("linear growth slope at zero load") {
    // Symmetric D = 2 without arrivals: C_inf = 0 and Delta C_1 = -2, so the
    // slope averages 2 / log 2.
    SeriesParams p;
    p.mc_paths = 1;
    AnalyticModel model(SplittingMeasure::dirac(0.5), 0.0, 2, p);
    const auto a = model.asymptotics(RenewalVariant::corrected);
    CHECK(a.span.has_value());
    CHECK(a.mean_slope == doctest::Approx(2.0 / std::log(2.0)).epsilon(1e-8));
    CHECK(a.at(1 << 20) > 0.0);
    CHECK(to_string(parse_variant("as_printed")) == std::string("as_printed"));
}
