#include "synthval/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "synthval/config.hpp"
#include "synthval/error.hpp"

namespace synthval {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool is_missing_text(const std::string& raw, const std::vector<std::string>& markers) {
    const std::string t = trim(raw);
    if (t.empty()) return true;
    const std::string l = lower(t);
    return std::any_of(markers.begin(), markers.end(), [&](const std::string& m) { return lower(trim(m)) == l; });
}

std::optional<double> parse_number(const std::string& raw) {
    std::string t = trim(raw);
    if (!t.empty() && t.front() == '+') t.erase(0, 1);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
}

void write_field(std::ostream& out, const std::string& s) {
    if (!needs_quotes(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char ch : s) {
        if (ch == '"') out << '"';
        out << ch;
    }
    out << '"';
}

}  // namespace

Manifest Manifest::load(const std::filesystem::path& path) {
    const auto cfg = KeyValueConfig::load(path);
    Manifest m;
    m.distinct_threshold = static_cast<std::size_t>(cfg.get_int("", "distinct_threshold", 10));
    if (auto markers = cfg.get("", "missing_markers")) m.missing_markers = split_list(*markers);
    if (cfg.has_section("columns")) {
        for (const auto& [name, kind] : cfg.section("columns")) m.kinds.emplace(name, column_kind_from_string(kind));
    }
    return m;
}

Manifest Manifest::from_table(const Table& t) {
    Manifest m;
    for (const auto& c : t.columns()) m.kinds.emplace(c.name(), c.kind());
    return m;
}

void Manifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest " + path.string());
    out << "distinct_threshold = " << distinct_threshold << "\n";
    out << "missing_markers = ";
    for (std::size_t i = 0; i < missing_markers.size(); ++i) out << (i ? ", " : "") << missing_markers[i];
    out << "\n[columns]\n";
    for (const auto& [name, kind] : kinds) out << name << " = " << to_string(kind) << "\n";
}

std::vector<std::vector<std::string>> read_csv_records(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && record.front().empty();
        if (!blank) {
            if (!records.empty() && record.size() != records.front().size()) {
                throw ParseError("ragged row at line " + std::to_string(record_line) + ": expected " +
                                 std::to_string(records.front().size()) + " fields, found " + std::to_string(record.size()));
            }
            records.push_back(std::move(record));
        }
        record.clear();
        record_line = line;
    };

    char ch = 0;
    while (in.get(ch)) {
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (ch == '\n') ++line;
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            if (field_started && !field.empty()) throw ParseError("stray quote at line " + std::to_string(line));
            in_quotes = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (in.peek() == '\n') break;
            ++line;
            end_record();
            break;
        case '\n':
            ++line;
            end_record();
            break;
        default:
            field.push_back(ch);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field starting near line " + std::to_string(record_line));
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

Table read_csv(std::istream& in, const std::optional<Manifest>& manifest) {
    const Manifest opts = manifest.value_or(Manifest{});
    auto records = read_csv_records(in);
    if (records.empty()) throw ParseError("CSV input has no header row");
    const auto& header = records.front();
    const std::size_t n_rows = records.size() - 1;

    if (!opts.kinds.empty()) {
        std::set<std::string> names(header.begin(), header.end());
        for (const auto& name : header) {
            if (!opts.kinds.count(name)) throw SchemaError("manifest does not name column '" + name + "'");
        }
        for (const auto& [name, kind] : opts.kinds) {
            if (!names.count(name)) throw SchemaError("manifest column '" + name + "' is not in the CSV header");
        }
    }

    std::vector<Column> columns;
    columns.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::vector<std::optional<std::string>> raw(n_rows);
        std::vector<double> numbers(n_rows, std::numeric_limits<double>::quiet_NaN());
        bool all_numeric = true;
        for (std::size_t r = 0; r < n_rows; ++r) {
            const std::string& cell = records[r + 1][c];
            if (is_missing_text(cell, opts.missing_markers)) continue;
            raw[r] = cell;
            if (auto v = parse_number(cell)) {
                numbers[r] = *v;
            } else {
                all_numeric = false;
            }
        }

        ColumnKind kind;
        if (auto it = opts.kinds.find(header[c]); it != opts.kinds.end()) {
            kind = it->second;
            if (kind == ColumnKind::Numeric && !all_numeric) {
                throw SchemaError("column '" + header[c] + "' declared numeric but holds non-numeric cells");
            }
        } else {
            std::vector<double> seen;
            for (double v : numbers) {
                if (!std::isnan(v)) seen.push_back(v);
            }
            std::sort(seen.begin(), seen.end());
            const auto distinct = static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
            kind = (all_numeric && distinct > opts.distinct_threshold) ? ColumnKind::Numeric : ColumnKind::Categorical;
        }

        if (kind == ColumnKind::Numeric) {
            columns.push_back(Column::numeric(header[c], std::move(numbers)));
        } else {
            for (auto& v : raw) {
                if (v) *v = trim(*v);
            }
            columns.push_back(Column::categorical(header[c], raw));
        }
    }
    return Table(std::move(columns));
}

Table load_csv(const std::filesystem::path& path, const std::optional<Manifest>& manifest) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_csv(in, manifest);
}

void write_csv_records(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            write_field(out, row[i]);
        }
        out << '\n';
    }
}

void write_csv(std::ostream& out, const Table& t) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(t.n_rows() + 1);
    rows.push_back(t.names());
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(t.n_cols());
        for (const auto& c : t.columns()) row.push_back(c.cell_text(r));
        rows.push_back(std::move(row));
    }
    write_csv_records(out, rows);
}

void write_csv(const std::filesystem::path& path, const Table& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, t);
}

}  // namespace synthval
