#include "splitstream/io.hpp"

#include <fstream>
#include <sstream>

#include "splitstream/errors.hpp"

namespace splitstream {

using nlohmann::json;

namespace {

double number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError(where + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

std::vector<double> weights(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": 'weights' must be a nonempty array");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(where + ": weights must be numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace

bool is_law_document(const json& j) { return j.is_object() && j.contains("branches"); }

BranchingLaw law_from_json(const json& j) {
    if (!is_law_document(j) || !j.at("branches").is_array()) throw ConfigError("law: expected {\"branches\": [...]}");
    std::vector<Branch> branches;
    std::size_t idx = 0;
    for (const auto& b : j.at("branches")) {
        const std::string where = "law branch " + std::to_string(idx++);
        if (!b.is_object()) throw ConfigError(where + ": expected an object");
        Branch br;
        br.prob = b.contains("prob") ? number(b, "prob", where) : 1.0;
        if (b.contains("mixture")) {
            if (!b.at("mixture").is_array() || b.at("mixture").empty())
                throw ConfigError(where + ": 'mixture' must be a nonempty array");
            for (const auto& mix : b.at("mixture")) {
                if (!mix.is_object() || !mix.contains("weights")) throw ConfigError(where + ": mixture entries need 'weights'");
                br.weight_law.push_back({number(mix, "prob", where), weights(mix.at("weights"), where)});
            }
        } else if (b.contains("weights")) {
            br.weight_law.push_back({1.0, weights(b.at("weights"), where)});
        } else {
            throw ConfigError(where + ": needs 'weights' or 'mixture'");
        }
        if (b.contains("g")) {
            if (!b.at("g").is_number_integer()) throw ConfigError(where + ": 'g' must be an integer");
            br.g = b.at("g").get<int>();
        } else {
            br.g = static_cast<int>(br.weight_law.front().v.size());
        }
        branches.push_back(std::move(br));
    }
    try {
        return BranchingLaw(std::move(branches));
    } catch (const InvalidLaw& e) {
        throw ConfigError(std::string("law: ") + e.what());
    }
}

SplittingMeasure measure_from_json(const json& j) {
    if (is_law_document(j)) return derive_splitting_measure(law_from_json(j));
    if (!j.is_object() || !j.contains("atoms") || !j.at("atoms").is_array())
        throw ConfigError("measure: expected {\"atoms\": [{\"w\": .., \"q\": ..}]} or a branching law");
    std::vector<Atom> atoms;
    for (const auto& a : j.at("atoms")) {
        if (!a.is_object()) throw ConfigError("measure: atoms must be objects");
        atoms.push_back({number(a, "w", "measure atom"), number(a, "q", "measure atom")});
    }
    try {
        return SplittingMeasure(std::move(atoms));
    } catch (const InvalidLaw& e) {
        throw ConfigError(std::string("measure: ") + e.what());
    }
}

json law_to_json(const BranchingLaw& law) {
    json branches = json::array();
    for (const auto& b : law.branches()) {
        json jb = {{"g", b.g}, {"prob", b.prob}};
        if (b.weight_law.size() == 1) {
            jb["weights"] = b.weight_law.front().v;
        } else {
            json mix = json::array();
            for (const auto& wv : b.weight_law) mix.push_back({{"prob", wv.prob}, {"weights", wv.v}});
            jb["mixture"] = mix;
        }
        branches.push_back(jb);
    }
    return {{"branches", branches}};
}

json measure_to_json(const SplittingMeasure& m) {
    json atoms = json::array();
    for (const auto& a : m.atoms()) atoms.push_back({{"w", a.w}, {"q", a.q}});
    return {{"atoms", atoms}};
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

BranchingLaw load_law(const std::string& path) {
    const json j = read_json_file(path);
    if (!is_law_document(j)) throw ConfigError("'" + path + "' does not describe a branching law");
    return law_from_json(j);
}

SplittingMeasure load_measure(const std::string& path) { return measure_from_json(read_json_file(path)); }

}  // namespace splitstream
