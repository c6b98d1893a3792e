#include "splitstream/stats.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <vector>

namespace splitstream {

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary out;
    out.count = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return out;
    CompensatedSum s;
    for (double x : xs) s.add(x);
    const double n = static_cast<double>(xs.size());
    out.mean = s.value() / n;
    if (xs.size() < 2) return out;
    CompensatedSum m2, m4;
    for (double x : xs) {
        const double d = x - out.mean;
        const double d2 = d * d;
        m2.add(d2);
        m4.add(d2 * d2);
    }
    const double mu2 = m2.value() / n;
    const double mu4 = m4.value() / n;
    out.variance = m2.value() / (n - 1.0);
    out.std_error = std::sqrt(out.variance / n);
    out.var_std_error = std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
    return out;
}

double batch_means_std_error(std::span<const double> xs, int batches) {
    const std::size_t n = xs.size();
    if (batches < 2 || n < static_cast<std::size_t>(batches)) return summarize(xs).std_error;
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
        const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(batches);
        const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(batches);
        means.push_back(summarize(xs.subspan(lo, hi - lo)).mean);
    }
    return summarize(means).std_error;
}

int resolve_workers(int workers) {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t n, int workers,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (n <= 0) return;
    const std::int64_t w = std::min<std::int64_t>(resolve_workers(workers), n);
    if (w <= 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
    pool.reserve(static_cast<std::size_t>(w));
    for (std::int64_t t = 0; t < w; ++t) {
        const std::int64_t lo = n * t / w;
        const std::int64_t hi = n * (t + 1) / w;
        pool.emplace_back([&body, &errors, t, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace splitstream
