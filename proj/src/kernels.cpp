#include "splitstream/kernels.hpp"

#include <cmath>

#include <boost/math/special_functions/beta.hpp>

namespace splitstream::kernels {

double binomial_coefficient(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (k > n - k) k = n - k;
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * (n - k + j) / j;
    return c;
}

double poisson_pmf(int l, double y) {
    if (l < 0) return 0.0;
    if (y <= 0.0) return l == 0 ? 1.0 : 0.0;
    if (l == 0) return std::exp(-y);
    return std::exp(l * std::log(y) - y - std::lgamma(l + 1.0));
}

double row_d_term(int l, double y) { return poisson_pmf(l - 1, y) - poisson_pmf(l, y); }

double poisson_pmf_drop(int l, double a, double h) {
    if (l < 0) return 0.0;
    if (h == 0.0) return -row_d_term(l, a);
    // (e^{-a}/l!) [a^l (1 - e^{-h})/h - e^{-h} sum_{j>=1} C(l,j) a^{l-j} h^{j-1}]
    const double first = std::pow(a, l) * (-std::expm1(-h) / h);
    double rest = 0.0;
    for (int j = 1; j <= l; ++j) rest += binomial_coefficient(l, j) * std::pow(a, l - j) * std::pow(h, j - 1);
    return std::exp(-a - std::lgamma(l + 1.0)) * (first - std::exp(-h) * rest);
}

double boundary_term(int m, int l, double p, double y) {
    if (l < 0) return 0.0;
    const double none_over_p = p >= 1.0 ? 1.0 : -std::expm1(m * std::log1p(-p)) / p;
    double s = none_over_p * poisson_pmf(l, y);
    for (int j = 1; j <= m && j <= l; ++j) {
        s -= binomial_coefficient(m, j) * std::pow(p, j - 1) * std::pow(1.0 - p, m - j) * poisson_pmf(l - j, y);
    }
    return s;
}

double binom_upper_over_p(std::int64_t n, int i, double p) {
    if (n < static_cast<std::int64_t>(i) + 1) return 0.0;
    if (p >= 1.0) return 1.0;
    if (p <= 0.0) return i == 0 ? static_cast<double>(n) : 0.0;
    if (i == 0) return -std::expm1(static_cast<double>(n) * std::log1p(-p)) / p;
    return boost::math::ibeta(static_cast<double>(i + 1), static_cast<double>(n - i), p) / p;
}

}  // namespace splitstream::kernels
