#pragma once

#include <cstdint>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "splitstream/config.hpp"
#include "splitstream/output.hpp"

namespace splitstream {

enum class Verdict { pass, fail, skipped };

const char* to_string(Verdict v);

struct CheckResult {
    std::string id;
    std::string name;
    Verdict verdict = Verdict::fail;
    std::string measured;
    std::string tolerance;
    std::uint64_t seed = 0;
    double seconds = 0.0;
};

struct ValidationReport {
    std::vector<CheckResult> rows;

    bool ok() const;
    /// One CSV row per check, with a provenance comment line.
    std::string to_csv(const Provenance& prov) const;
};

struct SuiteOptions {
    std::uint64_t seed = 1;
    int workers = 0;
    std::set<int> only;  // empty runs every criterion
    std::ostream* progress = nullptr;  // receives each line as it finishes
};

/// The twelve end-to-end criteria on the fixed reference measures.
ValidationReport run_acceptance_suite(const SuiteOptions& opt);

/// The subset of checks that applies to one configured system.
ValidationReport run_validate(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

/// "[PASS] <id> <name>: measured=<...> tolerance=<...> seed=<...> (<t>s)"
std::string format_line(const CheckResult& r);

}  // namespace splitstream
