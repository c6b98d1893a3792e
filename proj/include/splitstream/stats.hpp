#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace splitstream {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct SampleSummary {
    std::int64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;      // unbiased
    double std_error = 0.0;     // of the mean
    double var_std_error = 0.0; // of the sample variance (normal-free, from 4th moment)
};

/// Two-pass compensated summary; order-dependent only through the input order.
SampleSummary summarize(std::span<const double> xs);

/// Standard error of the mean from `batches` contiguous batch means.
double batch_means_std_error(std::span<const double> xs, int batches);

/// Resolve a worker count: 0 means hardware concurrency.
int resolve_workers(int workers);

/// Runs body(i) for i in [0, n) over contiguous static chunks. Each index
/// must write only its own output slot, which keeps reductions that follow
/// independent of the worker count.
void parallel_for(std::int64_t n, int workers,
                  const std::function<void(std::int64_t begin, std::int64_t end)>& body);

}  // namespace splitstream
