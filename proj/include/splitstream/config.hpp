#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "splitstream/analytic.hpp"
#include "splitstream/protocol_sim.hpp"

namespace splitstream {

/// Settings of a batch run. Paths are resolved relative to the config file.
struct ExperimentConfig {
    std::string law;      // branching law file; drives simulation and analytics
    std::string measure;  // optional atoms file used when no law is given
    int d = 2;
    std::string arrivals = "none";
    SeriesParams series;
    std::string outputs;  // directory for validate reports; empty means stdout only
    std::uint64_t seed = 1;

    // Monte Carlo budgets for `validate`.
    std::int64_t trials = 100'000;
    std::int64_t probe_horizon = 100'000;
    int probe_reps = 20;

    /// Canonical JSON text of every field; hashed into output provenance.
    nlohmann::json to_json() const;
    std::string hash() const;
};

/// Seed from SPLITSTREAM_SEED, or `fallback` when unset.
std::uint64_t default_seed(std::uint64_t fallback = 1);

/// Parses a config document; unknown keys and bad types raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
ExperimentConfig load_config(const std::string& path);

/// Checks that referenced files exist and values are in range.
void check_config(const ExperimentConfig& cfg);

/// The configured branching law; ConfigError when only atoms were given.
BranchingLaw config_law(const ExperimentConfig& cfg);
/// Measure derived from `law`, or read from `measure`.
SplittingMeasure config_measure(const ExperimentConfig& cfg);

}  // namespace splitstream
