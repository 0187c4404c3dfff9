#pragma once

// Minimal CSV reading/writing with RFC-4180 quoting and shortest round-trip
// float formatting (std::to_chars), so artifacts are byte-stable across runs
// and platforms. Lines starting with '#' are artifact metadata and are
// skipped by the reader.

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace recomb {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

std::string csv_escape(std::string_view field);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> comments;  // leading '#' lines, in order

    std::size_t column(std::string_view name) const;             // throws if absent
    std::optional<std::size_t> find_column(std::string_view name) const;
    const std::string& cell(std::size_t row, std::string_view name) const;
};

CsvTable parse_csv(const std::string& text);

double parse_double_cell(const std::string& cell);  // empty -> NaN

}  // namespace recomb
