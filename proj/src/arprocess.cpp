#include "splitstream/arprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "splitstream/errors.hpp"
#include "splitstream/stats.hpp"

namespace splitstream {

namespace {

template <class Draw>
WPath build_path(int steps, Draw&& draw) {
    if (steps < 0) throw std::invalid_argument("path length must be nonnegative");
    const auto n = static_cast<std::size_t>(steps);
    WPath p;
    p.weights.reserve(n);
    p.pi.assign(n + 1, 1.0);
    p.x.assign(n + 1, 0.0);
    p.x_star.assign(n + 1, 0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double w = draw();
        p.weights.push_back(w);
        p.pi[k] = p.pi[k - 1] * w;
        p.x[k] = ar_step(p.x[k - 1], w);
        p.x_star[k] = p.x_star[k - 1] + p.pi[k - 1];
    }
    return p;
}

template <class Draw>
double forward_series(int depth, Draw&& draw) {
    double x = 0.0;
    double pi = 1.0;
    for (int p = 0; p < depth; ++p) {
        x += pi;
        pi *= draw();
    }
    return x;
}

}  // namespace

WPath sample_path(const SplittingMeasure& m, int steps, Rng& rng) {
    return build_path(steps, [&] { return sample_weight(m, rng); });
}

WPath sample_path(const WeightSampler& sampler, int steps, Rng& rng) {
    return build_path(steps, [&] { return sampler.draw(rng); });
}

int truncation_depth(double delta, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("truncation tolerance must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    int P = std::max(1, static_cast<int>(std::ceil(std::log(tol * (1.0 - delta)) / std::log(delta))));
    while (P > 1 && std::pow(delta, P - 1) / (1.0 - delta) <= tol) --P;
    while (std::pow(delta, P) / (1.0 - delta) > tol) ++P;
    return P;
}

XInfSampler::XInfSampler(SplittingMeasure measure, double tol)
    : measure_(std::move(measure)), tol_(tol), depth_(truncation_depth(measure_.delta(), tol)) {}

double XInfSampler::sample(Rng& rng) const {
    return forward_series(depth_, [&] { return sample_weight(measure_, rng); });
}

double sample_x_inf(const XInfSampler& s, Rng& rng) { return s.sample(rng); }

double sample_x_inf(const WeightSampler& sampler, double tol, Rng& rng) {
    return forward_series(truncation_depth(sampler.delta, tol), [&] { return sampler.draw(rng); });
}

std::vector<double> sample_x_inf_many(const XInfSampler& s, std::int64_t n, std::uint64_t seed, int workers) {
    std::vector<double> out(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)));
    parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
            out[static_cast<std::size_t>(i)] = s.sample(rng);
        }
    });
    return out;
}

std::vector<LaplaceEstimate> laplace_from_samples(std::span<const double> xinf, std::span<const double> s_values) {
    std::vector<LaplaceEstimate> out;
    std::vector<double> vals(xinf.size());
    for (double s : s_values) {
        if (s < 0.0) throw std::invalid_argument("Laplace argument must be nonnegative");
        for (std::size_t i = 0; i < xinf.size(); ++i) vals[i] = std::exp(-s * xinf[i]);
        LaplaceEstimate e;
        e.estimate = summarize(vals).mean;
        e.std_error = batch_means_std_error(vals, 100);
        out.push_back(e);
    }
    return out;
}

LaplaceEstimate laplace_x_inf(const SplittingMeasure& m, double s, std::int64_t n_samples, double tol,
                              std::uint64_t seed, int workers) {
    if (n_samples < 1) throw std::invalid_argument("need at least one sample");
    const XInfSampler sampler(m, tol);
    const auto xs = sample_x_inf_many(sampler, n_samples, seed, workers);
    const double sv[] = {s};
    return laplace_from_samples(xs, sv).front();
}

double laplace_x_inf_binary_closed(double p, double lam) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (std::abs(p - 0.5) < 1e-12) throw NotApplicable("closed form is 0/0 at p = 1/2; use exp(-2 lam)");
    if (!(lam > 0.0)) throw std::invalid_argument("lam must be positive");
    const double q = 1.0 - p;
    const double t = lam * (1.0 / q - 1.0 / p);
    // (e^{-lam/p} - e^{-lam/q}) / (lam (1/q - 1/p)) without cancellation.
    return std::exp(-lam / q) * std::expm1(t) / t;
}

}  // namespace splitstream
