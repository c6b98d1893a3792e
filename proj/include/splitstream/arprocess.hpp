#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "splitstream/rng.hpp"
#include "splitstream/splitting.hpp"

namespace splitstream {

/// A sampled weight path with its running products and the two
/// auto-regressive sequences driven by it.
struct WPath {
    std::vector<double> weights;  // w_1..w_K
    std::vector<double> pi;       // pi_0 = 1, pi_k = pi_{k-1} w_k
    std::vector<double> x;        // X_0 = 0, X_k = w_k X_{k-1} + 1
    std::vector<double> x_star;   // X*_k = sum_{p<k} pi_p
};

/// User-supplied i.i.d. weight source for measures that are not atomic.
/// Only the path and X_inf samplers accept it; analytic series need atoms.
struct WeightSampler {
    std::function<double(Rng&)> draw;
    double delta = 0.0;  // almost-sure upper bound of the weights
};

inline double ar_step(double x, double w) { return w * x + 1.0; }

WPath sample_path(const SplittingMeasure& m, int steps, Rng& rng);
WPath sample_path(const WeightSampler& sampler, int steps, Rng& rng);

/// Samples X_inf through the forward series X*_P; the truncation error is
/// at most delta^P / (1 - delta) <= tol for every draw.
class XInfSampler {
public:
    XInfSampler(SplittingMeasure measure, double tol = 1e-10);

    const SplittingMeasure& measure() const { return measure_; }
    double tol() const { return tol_; }
    int depth() const { return depth_; }

    double sample(Rng& rng) const;

private:
    SplittingMeasure measure_;
    double tol_;
    int depth_;
};

/// Smallest P with delta^P / (1 - delta) <= tol.
int truncation_depth(double delta, double tol);

double sample_x_inf(const XInfSampler& s, Rng& rng);
double sample_x_inf(const WeightSampler& sampler, double tol, Rng& rng);

/// n draws of X_inf, draw i on stream (seed, i).
std::vector<double> sample_x_inf_many(const XInfSampler& s, std::int64_t n, std::uint64_t seed,
                                      int workers = 0);

struct LaplaceEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of E exp(-s X_inf) with batch-means standard error.
LaplaceEstimate laplace_x_inf(const SplittingMeasure& m, double s, std::int64_t n_samples,
                              double tol, std::uint64_t seed, int workers = 0);

/// Same estimate from precomputed X_inf draws, for several s at once.
std::vector<LaplaceEstimate> laplace_from_samples(std::span<const double> xinf,
                                                  std::span<const double> s_values);

/// Closed-form Laplace transform of X_inf for the binary measure
/// p delta_p + (1-p) delta_{1-p}, p != 1/2.
double laplace_x_inf_binary_closed(double p, double lam);

/// Symmetric binary limit: X_inf = 2 almost surely.
inline double laplace_x_inf_symmetric(double lam) { return std::exp(-2.0 * lam); }

}  // namespace splitstream
