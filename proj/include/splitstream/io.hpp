#pragma once

#include <string>

#include <json.hpp>

#include "splitstream/splitting.hpp"

namespace splitstream {

/// {"branches":[{"g":2,"prob":1.0,"weights":[0.3,0.7]}]}; a branch may give
/// "mixture":[{"prob":..,"weights":[..]}] instead of "weights".
BranchingLaw law_from_json(const nlohmann::json& j);

/// Accepts {"atoms":[{"w":..,"q":..}]} or a branching law document.
SplittingMeasure measure_from_json(const nlohmann::json& j);

nlohmann::json law_to_json(const BranchingLaw& law);
nlohmann::json measure_to_json(const SplittingMeasure& m);

/// Reads and parses a JSON file; ConfigError on I/O or syntax problems.
nlohmann::json read_json_file(const std::string& path);

BranchingLaw load_law(const std::string& path);
SplittingMeasure load_measure(const std::string& path);

/// True when the document describes a branching law rather than bare atoms.
bool is_law_document(const nlohmann::json& j);

}  // namespace splitstream
