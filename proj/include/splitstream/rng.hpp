#pragma once

#include <cstdint>
#include <random>

namespace splitstream {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Seed for an independent stream `stream` derived from a master seed.
/// Trials, paths and replications each use their own stream so results do
/// not depend on how work is split across threads.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace splitstream
