#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "synthval/config.hpp"
#include "synthval/csv.hpp"
#include "synthval/error.hpp"

using namespace synthval;
using fixtures::cat;
using fixtures::NA;

TEST_CASE("categorical columns store sorted levels and missing codes") {
    const Column c = cat("c", {"b", "a", "", "b"});
    CHECK(c.levels() == std::vector<std::string>{"a", "b"});
    CHECK(c.codes() == std::vector<int>{1, 0, Column::kMissingCode, 1});
    CHECK(c.missing_count() == 1);
    CHECK(c.distinct_count() == 2);
    CHECK(c.cell_text(2).empty());
    CHECK(c.find_level("b") == 1);
    CHECK_FALSE(c.find_level("z"));
}

TEST_CASE("numeric columns use NaN for missing cells") {
    const Column c = Column::numeric("x", {1.5, NA, 3.0, 1.5});
    CHECK(c.is_missing(1));
    CHECK(c.missing_count() == 1);
    CHECK(c.distinct_count() == 2);
    CHECK(c.cell_text(0) == "1.5");
}

TEST_CASE("table construction validates shape and names") {
    CHECK_THROWS_AS(Table({Column::numeric("a", {1, 2}), Column::numeric("b", {1})}), SchemaError);
    CHECK_THROWS_AS(Table({Column::numeric("a", {1}), Column::numeric("a", {1})}), SchemaError);
    const Table t({Column::numeric("a", {1, 2}), cat("b", {"x", "y"})});
    CHECK(t.index_of("b") == 1);
    CHECK_THROWS_AS(t.column("zz"), SchemaError);
    CHECK(t.without_column("a").names() == std::vector<std::string>{"b"});
}

TEST_CASE("schema check compares names and kinds in order") {
    const Table a({Column::numeric("a", {1}), cat("b", {"x"})});
    const Table b({Column::numeric("a", {2}), cat("b", {"y"})});
    const Table c({cat("a", {"1"}), cat("b", {"y"})});
    CHECK_NOTHROW(require_same_schema(a, b));
    CHECK_THROWS_AS(require_same_schema(a, c), SchemaError);
}

TEST_CASE("concat_rows merges categorical levels by label") {
    const Table a({cat("c", {"b", "a"})});
    const Table b({cat("c", {"z", "a"})});
    const Table t = concat_rows(a, b);
    CHECK(t.n_rows() == 4);
    CHECK(t.column(0).levels() == std::vector<std::string>{"a", "b", "z"});
    CHECK(t.column(0).label(2) == "z");
    CHECK(t.column(0).label(3) == "a");
}

TEST_CASE("canonical row order is invariant to row permutations") {
    const Table t = fixtures::random_mixed(50, 2, 2, 3, 4);
    std::vector<std::size_t> perm(t.n_rows());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(9);
    rng.shuffle(std::span<std::size_t>(perm));
    CHECK(canonical_row_order(t) == canonical_row_order(t.take_rows(perm)));
}

TEST_CASE("split partitions rows deterministically") {
    const auto [train, test] = split_indices(100, SplitSpec{0.7, 5, 1});
    CHECK(train.size() == 70);
    CHECK(test.size() == 30);
    std::set<std::size_t> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    CHECK(all.size() == 100);
    CHECK(split_indices(100, SplitSpec{0.7, 5, 1}) == split_indices(100, SplitSpec{0.7, 5, 1}));
    CHECK(split_indices(100, SplitSpec{0.7, 5, 1}) != split_indices(100, SplitSpec{0.7, 5, 2}));
    CHECK_THROWS_AS(split_indices(9, SplitSpec{}), PreconditionError);
    CHECK_THROWS_AS(split_indices(100, SplitSpec{1.0, 0, 1}), PreconditionError);
}

TEST_CASE("split of 768 rows keeps 538 for training") {
    CHECK(split_indices(768, SplitSpec{0.7, 1, 1}).first.size() == 538);
}

TEST_CASE("frequency and ordinal encodings") {
    const Table t({Column::numeric("x", {1, 2, 3, 4}), cat("c", {"b", "a", "b", "b"})});
    const Matrix f = encode_numeric(t, CategoricalEncoding::Frequency);
    CHECK(f(0, 1) == doctest::Approx(0.75));
    CHECK(f(1, 1) == doctest::Approx(0.25));
    const Matrix o = encode_numeric(t, CategoricalEncoding::Ordinal);
    CHECK(o(0, 1) == 1.0);
    CHECK(o(1, 1) == 0.0);
    CHECK(o(3, 0) == 4.0);
    const Table missing({Column::numeric("x", {1, NA})});
    CHECK_THROWS_AS(encode_numeric(missing), PreconditionError);
}

TEST_CASE("standardization uses population moments and zeroes constant columns") {
    Matrix m(4, 2);
    for (std::size_t r = 0; r < 4; ++r) {
        m(r, 0) = static_cast<double>(r);
        m(r, 1) = 7.0;
    }
    const Standardized z = standardize_columns(m);
    CHECK(z.means[0] == doctest::Approx(1.5));
    CHECK(z.stddevs[0] == doctest::Approx(std::sqrt(1.25)));
    CHECK(z.constant[1]);
    CHECK(z.values(3, 1) == 0.0);
    CHECK(z.values(0, 0) == doctest::Approx(-1.5 / std::sqrt(1.25)));
}

TEST_CASE("CSV records follow RFC 4180 quoting") {
    std::istringstream in("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\n");
    const auto rec = read_csv_records(in);
    REQUIRE(rec.size() == 3);
    CHECK(rec[1][0] == "x,1");
    CHECK(rec[1][1] == "say \"hi\"");
    CHECK(rec[2][0] == "multi\nline");
}

TEST_CASE("ragged CSV rows name their line") {
    std::istringstream in("a,b\n1,2\n3\n");
    try {
        read_csv_records(in);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("CSV type inference and missing markers") {
    std::string text = "num,small,word\n";
    for (int i = 0; i < 12; ++i) text += std::to_string(i) + "," + std::to_string(i % 3) + ",w" + std::to_string(i % 2) + "\n";
    text += "NA,,na\n";
    std::istringstream in(text);
    const Table t = read_csv(in);
    CHECK(t.column("num").is_numeric());
    CHECK(t.column("small").is_categorical());
    CHECK(t.column("word").is_categorical());
    CHECK(t.column("num").missing_count() == 1);
    CHECK(t.column("small").missing_count() == 1);
    CHECK(t.column("word").missing_count() == 1);
}

TEST_CASE("manifest overrides inference and must match the header") {
    Manifest m;
    m.kinds = {{"a", ColumnKind::Numeric}, {"b", ColumnKind::Categorical}};
    std::istringstream in("a,b\n1,2\n3,4\n");
    const Table t = read_csv(in, m);
    CHECK(t.column("a").is_numeric());
    CHECK(t.column("b").is_categorical());
    std::istringstream bad("a,c\n1,2\n");
    CHECK_THROWS_AS(read_csv(bad, m), SchemaError);
    std::istringstream wrong("a,b\nx,2\n");
    CHECK_THROWS_AS(read_csv(wrong, m), SchemaError);
}

TEST_CASE("CSV write then read round-trips a table") {
    const Table t = fixtures::random_mixed(40, 2, 2, 4, 11);
    const Manifest m = Manifest::from_table(t);
    std::stringstream buf;
    write_csv(buf, t);
    const Table back = read_csv(buf, m);
    CHECK(back == t);
}

TEST_CASE("manifest file round-trip") {
    const auto path = std::filesystem::temp_directory_path() / "synthval_manifest_test.cfg";
    Manifest m;
    m.kinds = {{"age", ColumnKind::Numeric}, {"sex", ColumnKind::Categorical}};
    m.missing_markers = {"NA", "?"};
    m.distinct_threshold = 7;
    m.save(path);
    const Manifest back = Manifest::load(path);
    CHECK(back.kinds == m.kinds);
    CHECK(back.missing_markers == m.missing_markers);
    CHECK(back.distinct_threshold == 7);
    std::filesystem::remove(path);
}

TEST_CASE("bundled datasets load") {
    const Table titanic = load_csv(fixtures::data_path("titanic.csv"));
    CHECK(titanic.n_rows() == 891);
    CHECK(titanic.column("Age").missing_count() == 177);
    CHECK(titanic.column("Survived").is_categorical());
    const Table diabetes = load_csv(fixtures::data_path("diabetes.csv"));
    CHECK(diabetes.n_rows() == 632);
    CHECK(diabetes.column("type").levels() == std::vector<std::string>{"No", "Yes"});
}

TEST_CASE("key-value config parsing") {
    const auto kv = KeyValueConfig::parse_string("# top\nseed = 4\nname = a b\n[metrics]\nbins = 20\nflag = yes\n[metrics]\nbins = 30\n");
    CHECK(kv.get_int("", "seed", 0) == 4);
    CHECK(kv.get_or("", "name", "") == "a b");
    CHECK(kv.get_int("metrics", "bins", 0) == 30);
    CHECK(kv.get_bool("metrics", "flag", false));
    CHECK(kv.get_double("metrics", "missing", 2.5) == 2.5);
    CHECK_THROWS_AS(kv.get_int("", "name", 0), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("[broken\n"), ParseError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("novalue\n"), ParseError);
}

TEST_CASE("key-value config JSON round-trip") {
    const auto kv = KeyValueConfig::parse_string("seed = 4\n[metrics]\nbins = 20\n");
    const auto back = KeyValueConfig::from_json(kv.to_json());
    CHECK(back.to_json() == kv.to_json());
    CHECK(split_list(" a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_list("").empty());
}

TEST_CASE("derived seeds differ by path and are stable") {
    CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
    Rng a(5);
    Rng b(5);
    for (int i = 0; i < 10; ++i) CHECK(a.next() == b.next());
    Rng r(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        CHECK(r.index(7) < 7);
    }
}
