#include "splitstream/path_ensemble.hpp"

#include <algorithm>
#include <stdexcept>

#include "splitstream/arprocess.hpp"
#include "splitstream/stats.hpp"

namespace splitstream {

PathEnsemble::PathEnsemble(const SplittingMeasure& m, std::int64_t n_paths, int depth, double xinf_tol,
                           std::uint64_t seed, int workers)
    : depth_(depth), delta_(m.delta()), single_atom_(m.single_atom()) {
    if (n_paths < 1) throw std::invalid_argument("path ensemble needs at least one path");
    if (depth < 1) throw std::invalid_argument("path depth must be at least 1");
    if (m.size() > 65535) throw std::invalid_argument("too many atoms for a path ensemble");
    n_paths_ = single_atom_ ? 1 : n_paths;
    for (const auto& a : m.atoms()) weights_.push_back(a.w);

    const int xinf_depth = truncation_depth(delta_, xinf_tol);
    const int stored = std::max(depth, xinf_depth);
    steps_.resize(static_cast<std::size_t>(n_paths_) * static_cast<std::size_t>(stored));
    xinf_.resize(static_cast<std::size_t>(n_paths_));
    stride_ = stored;

    parallel_for(n_paths_, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
            auto* row = steps_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(stored);
            double pi = 1.0;
            CompensatedSum x;
            for (int k = 0; k < stored; ++k) {
                const auto j = static_cast<std::uint16_t>(sample_atom(m, rng));
                row[k] = j;
                if (k < xinf_depth) {
                    x.add(pi);
                    pi *= weights_[j];
                }
            }
            xinf_[static_cast<std::size_t>(i)] = x.value();
        }
    });
}

void PathEnsemble::trace(std::int64_t path, std::span<double> pi, std::span<double> xstar) const {
    trace(path, depth_, pi, xstar);
}

void PathEnsemble::trace(std::int64_t path, int depth, std::span<double> pi, std::span<double> xstar) const {
    if (depth > depth_ || depth < 0) throw std::out_of_range("trace deeper than the ensemble");
    if (pi.size() < static_cast<std::size_t>(depth) + 1 || xstar.size() < static_cast<std::size_t>(depth) + 1)
        throw std::invalid_argument("trace buffers too short");
    const auto* row = steps_.data() + static_cast<std::size_t>(path) * static_cast<std::size_t>(stride_);
    pi[0] = 1.0;
    xstar[0] = 0.0;
    for (int k = 1; k <= depth; ++k) {
        pi[k] = pi[k - 1] * weights_[row[k - 1]];
        xstar[k] = xstar[k - 1] + pi[k - 1];
    }
}

}  // namespace splitstream
