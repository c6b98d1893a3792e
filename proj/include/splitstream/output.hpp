#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitstream {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double x);
std::string format_number(std::int64_t x);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Identifies how an output was produced.
struct Provenance {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;

    /// "# splitstream <version> cmd=<command> seed=<seed> config_hash=<hash>"
    std::string header() const;
    nlohmann::json to_json() const;
};

/// CSV with a provenance comment line and one schema (column name) line.
class CsvTable {
public:
    CsvTable(Provenance prov, std::vector<std::string> columns);

    void add_row(std::vector<std::string> cells);
    void write(std::ostream& os) const;

    static std::string cell(double x) { return format_number(x); }
    static std::string cell(std::int64_t x) { return format_number(x); }
    static std::string cell(int x) { return format_number(static_cast<std::int64_t>(x)); }
    static std::string cell(std::string s) { return s; }

private:
    Provenance prov_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// JSON text with numbers in shortest round-trip form and sorted keys.
std::string dump_json(const nlohmann::json& j);

/// Writes `text` to `path`, or to stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text);

}  // namespace splitstream
