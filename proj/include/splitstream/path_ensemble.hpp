#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "splitstream/splitting.hpp"

namespace splitstream {

/// A fixed bundle of weight paths shared by every series evaluation that
/// has to be mutually consistent (matrix rows, constants, mean sizes).
///
/// Path i is drawn from stream (seed, i), one draw per step, so a deeper
/// ensemble extends a shallower one with the same seed. Each path also
/// carries X*_inf summed to the xinf_tol depth, independent of `depth`.
/// A single-atom measure yields one deterministic path.
class PathEnsemble {
public:
    PathEnsemble(const SplittingMeasure& m, std::int64_t n_paths, int depth, double xinf_tol,
                 std::uint64_t seed, int workers = 0);

    std::int64_t size() const { return n_paths_; }
    int depth() const { return depth_; }
    bool exact() const { return n_paths_ == 1 && single_atom_; }
    double delta() const { return delta_; }

    double xinf(std::int64_t path) const { return xinf_[static_cast<std::size_t>(path)]; }

    /// Fills pi_0..pi_depth and X*_0..X*_depth of one path.
    void trace(std::int64_t path, std::span<double> pi, std::span<double> xstar) const;

    /// Same, for the first `depth + 1` entries only (depth <= this->depth()).
    void trace(std::int64_t path, int depth, std::span<double> pi, std::span<double> xstar) const;

private:
    std::vector<double> weights_;
    std::vector<std::uint16_t> steps_;  // n_paths x depth atom indices
    std::vector<double> xinf_;
    std::int64_t n_paths_ = 0;
    int depth_ = 0;
    int stride_ = 0;
    double delta_ = 0.0;
    bool single_atom_ = false;
};

}  // namespace splitstream
