#include "splitstream/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <set>

#include "splitstream/errors.hpp"
#include "splitstream/io.hpp"
#include "splitstream/output.hpp"

namespace splitstream {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ConfigError("unknown " + where + " field '" + k + "'");
    }
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base) / p).lexically_normal().string();
}

}  // namespace

json ExperimentConfig::to_json() const {
    return {{"law", law},
            {"measure", measure},
            {"d", d},
            {"arrivals", arrivals},
            {"series",
             {{"k_max", series.k_max},
              {"mc_paths", series.mc_paths},
              {"xinf_tol", series.xinf_tol},
              {"regularize", series.regularize}}},
            {"outputs", outputs},
            {"seed", seed},
            {"trials", trials},
            {"probe_horizon", probe_horizon},
            {"probe_reps", probe_reps}};
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(to_json().dump()); }

std::uint64_t default_seed(std::uint64_t fallback) {
    const char* env = std::getenv("SPLITSTREAM_SEED");
    if (!env || !*env) return fallback;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("SPLITSTREAM_SEED is not an unsigned integer: ") + env);
    }
}

ExperimentConfig config_from_json(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"law", "measure", "d", "arrivals", "series", "outputs", "seed", "trials", "probe_horizon", "probe_reps"},
                   "config");
    ExperimentConfig c;
    c.seed = default_seed(1);
    c.law = resolve(base_dir, field<std::string>(j, "law", ""));
    c.measure = resolve(base_dir, field<std::string>(j, "measure", ""));
    c.d = field<int>(j, "d", c.d);
    c.arrivals = field<std::string>(j, "arrivals", c.arrivals);
    c.outputs = resolve(base_dir, field<std::string>(j, "outputs", ""));
    c.seed = field<std::uint64_t>(j, "seed", c.seed);
    c.trials = field<std::int64_t>(j, "trials", c.trials);
    c.probe_horizon = field<std::int64_t>(j, "probe_horizon", c.probe_horizon);
    c.probe_reps = field<int>(j, "probe_reps", c.probe_reps);
    if (j.contains("series")) {
        const json& s = j.at("series");
        if (!s.is_object()) throw ConfigError("config field 'series' must be an object");
        reject_unknown(s, {"k_max", "mc_paths", "xinf_tol", "regularize", "workers"}, "series");
        c.series.k_max = field<int>(s, "k_max", c.series.k_max);
        c.series.mc_paths = field<std::int64_t>(s, "mc_paths", c.series.mc_paths);
        c.series.xinf_tol = field<double>(s, "xinf_tol", c.series.xinf_tol);
        c.series.regularize = field<bool>(s, "regularize", c.series.regularize);
        c.series.workers = field<int>(s, "workers", c.series.workers);
    }
    c.series.seed = c.seed;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    const json j = read_json_file(path);
    return config_from_json(j, std::filesystem::path(path).parent_path().string());
}

void check_config(const ExperimentConfig& cfg) {
    if (cfg.law.empty() && cfg.measure.empty()) throw ConfigError("config names neither a law nor a measure file");
    for (const auto* p : {&cfg.law, &cfg.measure}) {
        if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("referenced file '" + *p + "' does not exist");
    }
    if (cfg.d < 1) throw ConfigError("d must be at least 1");
    if (cfg.series.k_max < 0) throw ConfigError("series.k_max must be positive (0 selects it automatically)");
    if (cfg.series.mc_paths < 1) throw ConfigError("series.mc_paths must be at least 1");
    if (!(cfg.series.xinf_tol > 0.0)) throw ConfigError("series.xinf_tol must be positive");
    if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
    if (cfg.probe_horizon < 1000) throw ConfigError("probe_horizon must be at least 1000");
    if (cfg.probe_reps < 2) throw ConfigError("probe_reps must be at least 2");
    ArrivalLaw::parse(cfg.arrivals);
    config_measure(cfg);
}

BranchingLaw config_law(const ExperimentConfig& cfg) {
    if (cfg.law.empty()) throw ConfigError("this operation simulates the protocol and needs a branching law file");
    return load_law(cfg.law);
}

SplittingMeasure config_measure(const ExperimentConfig& cfg) {
    if (!cfg.law.empty()) return derive_splitting_measure(load_law(cfg.law));
    return load_measure(cfg.measure);
}

}  // namespace splitstream
