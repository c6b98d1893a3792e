#include <algorithm>
#include <cmath>
#include <initializer_list>

#include <doctest.h>

#include "splitstream/kernels.hpp"

using namespace splitstream::kernels;

namespace {

double binom_pmf(int n, int k, double p) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                    (n - k) * std::log1p(-p));
}

double pois(int l, double y) {
    if (l < 0) return 0.0;
    if (y == 0.0) return l == 0 ? 1.0 : 0.0;
    return std::exp(l * std::log(y) - y - std::lgamma(l + 1.0));
}

}  // namespace

TEST_CASE("poisson pmf and its derivative") {
    CHECK(poisson_pmf(0, 0.0) == 1.0);
    CHECK(poisson_pmf(2, 0.0) == 0.0);
    CHECK(poisson_pmf(-1, 1.0) == 0.0);
    CHECK(poisson_pmf(3, 1.7) == doctest::Approx(std::pow(1.7, 3) * std::exp(-1.7) / 6));
    const double y = 0.8;
    const double h = 1e-6;
    for (int l = 0; l < 5; ++l) {
        const double fd = (pois(l, y + h) - pois(l, y - h)) / (2 * h);
        CHECK(row_d_term(l, y) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("pmf drop quotient") {
    for (int l = 0; l < 4; ++l) {
        for (double h : {1e-3, 0.1, 2.0}) {
            const double direct = (pois(l, 0.4) - pois(l, 0.4 + h)) / h;
            CHECK(poisson_pmf_drop(l, 0.4, h) == doctest::Approx(direct).epsilon(1e-9));
        }
        CHECK(poisson_pmf_drop(l, 0.4, 0.0) == doctest::Approx(-row_d_term(l, 0.4)));
        // tiny h must approach the derivative without cancellation
        CHECK(poisson_pmf_drop(l, 0.4, 1e-13) == doctest::Approx(-row_d_term(l, 0.4)).epsilon(1e-9));
    }
}

TEST_CASE("boundary term against the convolution") {
    for (int m : {1, 2, 3, 5}) {
        for (double p : {0.5, 0.3, 1e-3}) {
            for (double y : {0.0, 0.2, 1.5}) {
                for (int l = 0; l < 6; ++l) {
                    double conv = 0.0;
                    for (int b = 0; b <= std::min(m, l); ++b) conv += binom_pmf(m, b, p) * pois(l - b, y);
                    const double direct = (pois(l, y) - conv) / p;
                    CHECK(boundary_term(m, l, p, y) == doctest::Approx(direct).epsilon(1e-8).scale(1.0));
                }
            }
        }
    }
}

TEST_CASE("binomial tail over p") {
    for (int n : {2, 5, 40}) {
        for (double p : {0.5, 0.1, 0.01}) {
            for (int i = 0; i < n; ++i) {
                double tail = 0.0;
                for (int k = i + 1; k <= n; ++k) tail += binom_pmf(n, k, p);
                CHECK(binom_upper_over_p(n, i, p) == doctest::Approx(tail / p).epsilon(1e-9));
            }
            CHECK(binom_upper_over_p(n, n, p) == 0.0);
        }
    }
    // small p limits: P(B >= 1)/p -> n, P(B >= 2)/p -> 0
    CHECK(binom_upper_over_p(1000, 0, 1e-300) == doctest::Approx(1000.0));
    CHECK(binom_upper_over_p(1000, 1, 1e-200) == doctest::Approx(0.0));
    CHECK(binom_upper_over_p(7, 3, 1.0) == 1.0);
}

TEST_CASE("binomial coefficient") {
    CHECK(binomial_coefficient(10, 3) == 120.0);
    CHECK(binomial_coefficient(5, 0) == 1.0);
    CHECK(binomial_coefficient(3, 5) == 0.0);
}
