#include "splitstream/output.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "splitstream/errors.hpp"

namespace splitstream {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string format_number(std::int64_t x) { return std::to_string(x); }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Provenance::header() const {
    return "# splitstream " SPLITSTREAM_VERSION " cmd=" + command + " seed=" + std::to_string(seed) +
           " config_hash=" + config_hash;
}

nlohmann::json Provenance::to_json() const {
    return {{"tool", "splitstream"},
            {"version", SPLITSTREAM_VERSION},
            {"command", command},
            {"seed", seed},
            {"config_hash", config_hash}};
}

CsvTable::CsvTable(Provenance prov, std::vector<std::string> columns)
    : prov_(std::move(prov)), columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) throw std::invalid_argument("CSV row width differs from the header");
    rows_.push_back(std::move(cells));
}

void CsvTable::write(std::ostream& os) const {
    os << prov_.header() << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

}  // namespace splitstream
