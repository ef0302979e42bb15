#include "synthval/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "synthval/error.hpp"
#include "synthval/rng.hpp"

namespace synthval {

std::string_view to_string(ColumnKind kind) {
    return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

ColumnKind column_kind_from_string(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "numeric" || lower == "continuous" || lower == "number") return ColumnKind::Numeric;
    if (lower == "categorical" || lower == "discrete" || lower == "category") return ColumnKind::Categorical;
    throw ParseError("unknown column kind '" + std::string(text) + "'");
}

Column Column::numeric(std::string name, std::vector<double> values) {
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Numeric;
    c.numbers_ = std::move(values);
    return c;
}

Column Column::categorical(std::string name, const std::vector<std::optional<std::string>>& values) {
    std::set<std::string> unique;
    for (const auto& v : values) {
        if (v) unique.insert(*v);
    }
    std::vector<std::string> levels(unique.begin(), unique.end());
    std::map<std::string_view, int> index;
    for (std::size_t i = 0; i < levels.size(); ++i) index.emplace(levels[i], static_cast<int>(i));
    std::vector<int> codes;
    codes.reserve(values.size());
    for (const auto& v : values) codes.push_back(v ? index.at(*v) : kMissingCode);
    return categorical(std::move(name), std::move(levels), std::move(codes));
}

Column Column::categorical(std::string name, std::vector<std::string> levels, std::vector<int> codes) {
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i - 1] < levels[i])) throw PreconditionError("categorical levels of '" + name + "' must be sorted and unique");
    }
    for (int code : codes) {
        if (code != kMissingCode && (code < 0 || static_cast<std::size_t>(code) >= levels.size())) {
            throw PreconditionError("categorical code out of range in column '" + name + "'");
        }
    }
    Column c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::Categorical;
    c.levels_ = std::move(levels);
    c.codes_ = std::move(codes);
    return c;
}

std::size_t Column::size() const {
    return is_numeric() ? numbers_.size() : codes_.size();
}

bool Column::is_missing(std::size_t row) const {
    return is_numeric() ? std::isnan(numbers_[row]) : codes_[row] == kMissingCode;
}

std::size_t Column::missing_count() const {
    std::size_t n = 0;
    for (std::size_t r = 0; r < size(); ++r) n += is_missing(r) ? 1 : 0;
    return n;
}

std::size_t Column::distinct_count() const {
    if (is_categorical()) {
        std::vector<bool> seen(levels_.size(), false);
        std::size_t n = 0;
        for (int code : codes_) {
            if (code != kMissingCode && !seen[static_cast<std::size_t>(code)]) {
                seen[static_cast<std::size_t>(code)] = true;
                ++n;
            }
        }
        return n;
    }
    std::vector<double> values;
    values.reserve(numbers_.size());
    for (double v : numbers_) {
        if (!std::isnan(v)) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    return static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
}

std::optional<int> Column::find_level(std::string_view level) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), level);
    if (it == levels_.end() || *it != level) return std::nullopt;
    return static_cast<int>(it - levels_.begin());
}

std::string Column::cell_text(std::size_t row) const {
    if (is_missing(row)) return {};
    if (is_categorical()) return label(row);
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, numbers_[row]);
    return std::string(buf, res.ptr);
}

Column Column::take(std::span<const std::size_t> rows) const {
    Column c;
    c.name_ = name_;
    c.kind_ = kind_;
    c.levels_ = levels_;
    if (is_numeric()) {
        c.numbers_.reserve(rows.size());
        for (std::size_t r : rows) c.numbers_.push_back(numbers_[r]);
    } else {
        c.codes_.reserve(rows.size());
        for (std::size_t r : rows) c.codes_.push_back(codes_[r]);
    }
    return c;
}

Column Column::renamed(std::string name) const {
    Column c = *this;
    c.name_ = std::move(name);
    return c;
}

Column Column::with_numbers(std::vector<double> values) const {
    if (!is_numeric()) throw PreconditionError("column '" + name_ + "' is not numeric");
    return numeric(name_, std::move(values));
}

Column Column::with_codes(std::vector<int> codes) const {
    if (!is_categorical()) throw PreconditionError("column '" + name_ + "' is not categorical");
    return categorical(name_, levels_, std::move(codes));
}

bool Column::operator==(const Column& other) const {
    if (name_ != other.name_ || kind_ != other.kind_ || size() != other.size()) return false;
    for (std::size_t r = 0; r < size(); ++r) {
        const bool ma = is_missing(r);
        const bool mb = other.is_missing(r);
        if (ma != mb) return false;
        if (ma) continue;
        if (is_numeric()) {
            if (numbers_[r] != other.numbers_[r]) return false;
        } else if (label(r) != other.label(r)) {
            return false;
        }
    }
    return true;
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
    n_rows_ = columns_.empty() ? 0 : columns_.front().size();
    std::unordered_set<std::string> names;
    for (const auto& c : columns_) {
        if (c.size() != n_rows_) throw SchemaError("column '" + c.name() + "' has a different row count");
        if (!names.insert(c.name()).second) throw SchemaError("duplicate column name '" + c.name() + "'");
    }
}

const Column& Table::column(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw SchemaError("no column named '" + std::string(name) + "'");
    return columns_[*idx];
}

std::optional<std::size_t> Table::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name() == name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> Table::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name());
    return out;
}

bool Table::has_missing() const {
    return std::any_of(columns_.begin(), columns_.end(), [](const Column& c) { return c.missing_count() > 0; });
}

Table Table::take_rows(std::span<const std::size_t> rows) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) cols.push_back(c.take(rows));
    return Table(std::move(cols));
}

Table Table::with_column(std::size_t index, Column column) const {
    std::vector<Column> cols = columns_;
    cols.at(index) = std::move(column);
    return Table(std::move(cols));
}

Table Table::without_column(std::string_view name) const {
    std::vector<Column> cols;
    for (const auto& c : columns_) {
        if (c.name() != name) cols.push_back(c);
    }
    if (cols.size() == columns_.size()) throw SchemaError("no column named '" + std::string(name) + "'");
    return Table(std::move(cols));
}

bool Table::operator==(const Table& other) const {
    return n_rows_ == other.n_rows_ && columns_ == other.columns_;
}

void require_same_schema(const Table& a, const Table& b) {
    if (a.n_cols() != b.n_cols()) {
        throw SchemaError("tables have " + std::to_string(a.n_cols()) + " and " + std::to_string(b.n_cols()) + " columns");
    }
    for (std::size_t i = 0; i < a.n_cols(); ++i) {
        const auto& ca = a.column(i);
        const auto& cb = b.column(i);
        if (ca.name() != cb.name()) throw SchemaError("column " + std::to_string(i) + " is '" + ca.name() + "' vs '" + cb.name() + "'");
        if (ca.kind() != cb.kind()) throw SchemaError("column '" + ca.name() + "' differs in kind");
    }
}

Table concat_rows(const Table& a, const Table& b) {
    require_same_schema(a, b);
    std::vector<Column> cols;
    cols.reserve(a.n_cols());
    for (std::size_t i = 0; i < a.n_cols(); ++i) {
        const auto& ca = a.column(i);
        const auto& cb = b.column(i);
        if (ca.is_numeric()) {
            std::vector<double> values = ca.numbers();
            values.insert(values.end(), cb.numbers().begin(), cb.numbers().end());
            cols.push_back(Column::numeric(ca.name(), std::move(values)));
            continue;
        }
        std::vector<std::string> levels;
        std::set_union(ca.levels().begin(), ca.levels().end(), cb.levels().begin(), cb.levels().end(),
                       std::back_inserter(levels));
        auto remap = [&](const Column& c) {
            std::vector<int> map(c.levels().size());
            for (std::size_t l = 0; l < c.levels().size(); ++l) {
                map[l] = static_cast<int>(std::lower_bound(levels.begin(), levels.end(), c.levels()[l]) - levels.begin());
            }
            return map;
        };
        const auto map_a = remap(ca);
        const auto map_b = remap(cb);
        std::vector<int> codes;
        codes.reserve(ca.size() + cb.size());
        for (int code : ca.codes()) codes.push_back(code == Column::kMissingCode ? code : map_a[static_cast<std::size_t>(code)]);
        for (int code : cb.codes()) codes.push_back(code == Column::kMissingCode ? code : map_b[static_cast<std::size_t>(code)]);
        cols.push_back(Column::categorical(ca.name(), std::move(levels), std::move(codes)));
    }
    return Table(std::move(cols));
}

Table canonical_row_order(const Table& t) {
    std::vector<std::size_t> order(t.n_rows());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t x, std::size_t y) {
        for (const auto& c : t.columns()) {
            const bool mx = c.is_missing(x);
            const bool my = c.is_missing(y);
            if (mx != my) return mx;
            if (mx) continue;
            if (c.is_numeric()) {
                if (c.number(x) != c.number(y)) return c.number(x) < c.number(y);
            } else if (c.code(x) != c.code(y)) {
                return c.code(x) < c.code(y);
            }
        }
        return false;
    };
    std::stable_sort(order.begin(), order.end(), less);
    return t.take_rows(order);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n_rows, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw PreconditionError("train fraction must lie in (0, 1)");
    }
    if (n_rows < 10) throw PreconditionError("table too small to split: " + std::to_string(n_rows) + " rows (need >= 10)");
    std::vector<std::size_t> order(n_rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(spec.seed, {seed_tag::split, static_cast<std::uint64_t>(spec.split_index)}));
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n_rows)));
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return {std::move(train), std::move(test)};
}

std::pair<Table, Table> split_train_test(const Table& t, const SplitSpec& spec) {
    auto [train, test] = split_indices(t.n_rows(), spec);
    return {t.take_rows(train), t.take_rows(test)};
}

std::string_view to_string(CategoricalEncoding encoding) {
    return encoding == CategoricalEncoding::Frequency ? "frequency" : "ordinal";
}

CategoricalEncoding categorical_encoding_from_string(std::string_view text) {
    if (text == "frequency") return CategoricalEncoding::Frequency;
    if (text == "ordinal") return CategoricalEncoding::Ordinal;
    throw ParseError("unknown categorical encoding '" + std::string(text) + "'");
}

Matrix encode_numeric(const Table& t, CategoricalEncoding encoding) {
    Matrix m(t.n_rows(), t.n_cols());
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
        const auto& col = t.column(c);
        if (col.missing_count() > 0) throw PreconditionError("column '" + col.name() + "' has missing cells; impute before encoding");
        if (col.is_numeric()) {
            for (std::size_t r = 0; r < t.n_rows(); ++r) m(r, c) = col.number(r);
            continue;
        }
        if (encoding == CategoricalEncoding::Ordinal) {
            for (std::size_t r = 0; r < t.n_rows(); ++r) m(r, c) = col.code(r);
            continue;
        }
        std::vector<std::size_t> counts(col.levels().size(), 0);
        for (int code : col.codes()) ++counts[static_cast<std::size_t>(code)];
        const double n = static_cast<double>(t.n_rows());
        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            m(r, c) = static_cast<double>(counts[static_cast<std::size_t>(col.code(r))]) / n;
        }
    }
    return m;
}

Standardized standardize_columns(const Matrix& m) {
    Standardized out{Matrix(m.rows(), m.cols()), std::vector<double>(m.cols(), 0.0),
                     std::vector<double>(m.cols(), 0.0), std::vector<bool>(m.cols(), false)};
    const double n = static_cast<double>(m.rows());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
        mean /= n;
        double var = 0.0;
        bool constant = true;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double d = m(r, c) - mean;
            var += d * d;
            if (m(r, c) != m(0, c)) constant = false;
        }
        var /= n;
        const double sd = std::sqrt(var);
        out.means[c] = mean;
        out.stddevs[c] = sd;
        out.constant[c] = constant || sd == 0.0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            out.values(r, c) = out.constant[c] ? 0.0 : (m(r, c) - mean) / sd;
        }
    }
    return out;
}

}  // namespace synthval
