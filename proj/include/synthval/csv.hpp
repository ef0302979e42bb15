#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthval/table.hpp"

namespace synthval {

// Schema manifest: column kinds plus parsing options. Stored as key-value
// text (see KeyValueConfig):
//
//   distinct_threshold = 10
//   missing_markers = NA, ?
//   [columns]
//   age = numeric
//   sex = categorical
struct Manifest {
    std::map<std::string, ColumnKind> kinds;
    // Matched case-insensitively after trimming; the empty cell is always missing.
    std::vector<std::string> missing_markers = {"NA"};
    // Columns with at most this many distinct values are inferred categorical.
    std::size_t distinct_threshold = 10;

    static Manifest load(const std::filesystem::path& path);
    static Manifest from_table(const Table& t);
    void save(const std::filesystem::path& path) const;
};

// RFC-4180 records; throws ParseError naming the 1-based line of a ragged row.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in);

Table read_csv(std::istream& in, const std::optional<Manifest>& manifest = std::nullopt);
Table load_csv(const std::filesystem::path& path, const std::optional<Manifest>& manifest = std::nullopt);

void write_csv(std::ostream& out, const Table& t);
void write_csv(const std::filesystem::path& path, const Table& t);

// Writes a header + rows of plain strings with RFC-4180 quoting.
void write_csv_records(std::ostream& out, const std::vector<std::vector<std::string>>& rows);

}  // namespace synthval
