#pragma once

#include <cstdint>

// Closed-form conditional expectations used by the analytic series. Every
// quantity that carries a 1/pi factor is evaluated without subtracting
// nearly equal numbers, so terms stay accurate for pi down to 1e-300.

namespace splitstream::kernels {

/// P(N = l) for N ~ Poisson(y); 0 for l < 0.
double poisson_pmf(int l, double y);

/// P(N = l - 1) - P(N = l), the derivative of the pmf in y.
double row_d_term(int l, double y);

/// (P(N(a) = l) - P(N(a + h) = l)) / h; the h -> 0 limit at h = 0.
double poisson_pmf_drop(int l, double a, double h);

/// (1/p) [P(N = l) - P(B + N = l)] with B ~ Binom(m, p), N ~ Poisson(y).
double boundary_term(int m, int l, double p, double y);

/// P(Binom(n, p) >= i + 1) / p; 0 when i + 1 > n.
double binom_upper_over_p(std::int64_t n, int i, double p);

double binomial_coefficient(int n, int k);

}  // namespace splitstream::kernels
