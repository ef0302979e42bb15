#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "synthval/matrix.hpp"

namespace synthval {

enum class ColumnKind { Numeric, Categorical };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view text);

// One typed column. Numeric cells are doubles with NaN marking a missing
// cell. Categorical cells are integer codes into a sorted, duplicate-free
// level list; kMissingCode marks a missing cell. Because levels are sorted,
// code order equals lexicographic category order.
class Column {
public:
    static constexpr int kMissingCode = -1;

    static Column numeric(std::string name, std::vector<double> values);
    static Column categorical(std::string name, const std::vector<std::optional<std::string>>& values);
    // `levels` must be sorted and unique; codes index into it or are kMissingCode.
    static Column categorical(std::string name, std::vector<std::string> levels, std::vector<int> codes);

    const std::string& name() const { return name_; }
    ColumnKind kind() const { return kind_; }
    bool is_numeric() const { return kind_ == ColumnKind::Numeric; }
    bool is_categorical() const { return kind_ == ColumnKind::Categorical; }
    std::size_t size() const;

    bool is_missing(std::size_t row) const;
    std::size_t missing_count() const;
    // Number of distinct non-missing values.
    std::size_t distinct_count() const;

    double number(std::size_t row) const { return numbers_[row]; }
    int code(std::size_t row) const { return codes_[row]; }
    const std::string& label(std::size_t row) const { return levels_[static_cast<std::size_t>(codes_[row])]; }

    const std::vector<double>& numbers() const { return numbers_; }
    const std::vector<int>& codes() const { return codes_; }
    const std::vector<std::string>& levels() const { return levels_; }
    std::optional<int> find_level(std::string_view level) const;

    // Text form used by the CSV writer; empty for a missing cell.
    std::string cell_text(std::size_t row) const;

    Column take(std::span<const std::size_t> rows) const;
    Column renamed(std::string name) const;
    Column with_numbers(std::vector<double> values) const;
    Column with_codes(std::vector<int> codes) const;

    // Cell-for-cell equality; categorical cells compare by label text.
    bool operator==(const Column& other) const;

private:
    std::string name_;
    ColumnKind kind_ = ColumnKind::Numeric;
    std::vector<double> numbers_;
    std::vector<int> codes_;
    std::vector<std::string> levels_;
};

// Immutable-by-convention columnar table. All columns share the row count and
// column names are unique.
class Table {
public:
    Table() = default;
    explicit Table(std::vector<Column> columns);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t index) const { return columns_[index]; }
    const Column& column(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    bool has_missing() const;

    Table take_rows(std::span<const std::size_t> rows) const;
    Table with_column(std::size_t index, Column column) const;
    Table without_column(std::string_view name) const;

    bool operator==(const Table& other) const;

private:
    std::vector<Column> columns_;
    std::size_t n_rows_ = 0;
};

// Throws SchemaError unless both tables have the same column names and kinds
// in the same order.
void require_same_schema(const Table& a, const Table& b);

// Stacks `b` under `a`. Categorical levels are merged by label text.
Table concat_rows(const Table& a, const Table& b);

// Rows sorted by their cell values (missing first, numbers ascending,
// categories by label text). Two tables holding the same multiset of rows map
// to identical tables, which makes row-order-dependent computations
// permutation invariant.
Table canonical_row_order(const Table& t);

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    int split_index = 1;
};

// Seeded random partition into (train, test); |train| = round(fraction * n).
std::pair<Table, Table> split_train_test(const Table& t, const SplitSpec& spec);
// Row indices of the (train, test) partition used by split_train_test.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n_rows, const SplitSpec& spec);

enum class CategoricalEncoding {
    Frequency,  // relative frequency of the category within its column
    Ordinal,    // level index in lexicographic order
};

std::string_view to_string(CategoricalEncoding encoding);
CategoricalEncoding categorical_encoding_from_string(std::string_view text);

// n_rows x n_cols real matrix; numeric columns pass through. Requires a table
// without missing cells.
Matrix encode_numeric(const Table& t, CategoricalEncoding encoding = CategoricalEncoding::Frequency);

struct Standardized {
    Matrix values;
    std::vector<double> means;
    std::vector<double> stddevs;  // population (1/n) standard deviation
    std::vector<bool> constant;   // zero-variance columns, mapped to zeros
};

Standardized standardize_columns(const Matrix& m);

}  // namespace synthval
