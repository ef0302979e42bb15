#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "synthval/csv.hpp"
#include "synthval/error.hpp"
#include "synthval/imputation.hpp"

using namespace synthval;
using fixtures::cat;
using fixtures::NA;

namespace {

// Every observed cell of `before` is unchanged in `after` and nothing is missing.
void check_fills_only_gaps(const Table& before, const Table& after) {
    REQUIRE(before.n_rows() == after.n_rows());
    CHECK_FALSE(after.has_missing());
    for (std::size_t c = 0; c < before.n_cols(); ++c) {
        for (std::size_t r = 0; r < before.n_rows(); ++r) {
            if (before.column(c).is_missing(r)) continue;
            CHECK(before.column(c).cell_text(r) == after.column(c).cell_text(r));
        }
    }
}

}  // namespace

TEST_CASE("substitution fills means and modes") {
    const Table t({Column::numeric("x", {1, NA, 3}), cat("c", {"a", "a", ""}), cat("d", {"b", "a", ""})});
    const Table out = impute_substitution(t);
    CHECK(out.column("x").number(1) == 2.0);
    CHECK(out.column("c").label(2) == "a");
    CHECK(out.column("d").label(2) == "a");
}

TEST_CASE("substitution rejects a fully missing column by name") {
    const Table t({Column::numeric("empty", {NA, NA}), Column::numeric("x", {1, 2})});
    try {
        impute_substitution(t);
        FAIL("expected an error");
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("empty") != std::string::npos);
    }
}

TEST_CASE("imputers are the identity on complete tables") {
    const Table t = fixtures::random_mixed(40, 2, 2, 3, 1);
    CHECK(impute_substitution(t) == t);
    CHECK(impute_regression(t, 1).table == t);
    CHECK(impute_cart(t, 1) == t);
}

TEST_CASE("regression imputation is exact on a noiseless line") {
    const Table t({Column::numeric("x", {1, 2, 3, 4, 5, 6}), Column::numeric("y", {2, 4, 6, NA, 10, 12})});
    const auto r = impute_regression(t, 3);
    CHECK(r.warnings.empty());
    CHECK(r.table.column("y").number(3) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("regression imputation falls back on a singular design") {
    // b duplicates a, so the design [1, a, b] is rank deficient.
    const Table t({Column::numeric("a", {1, 2, 3, 4, 5}), Column::numeric("b", {2, 4, 6, 8, 10}),
                   Column::numeric("y", {1, NA, 2, 5, 3})});
    const auto r = impute_regression(t, 3);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("y") != std::string::npos);
    CHECK(r.table.column("y").number(1) == doctest::Approx(11.0 / 4.0));
}

TEST_CASE("categorical regression imputation samples known levels") {
    Rng rng(2);
    std::vector<double> x(200);
    std::vector<std::optional<std::string>> c(200);
    for (std::size_t i = 0; i < 200; ++i) {
        x[i] = rng.normal();
        c[i] = x[i] > 0 ? "hi" : "lo";
        if (i % 10 == 0) c[i] = std::nullopt;
    }
    const Table t({Column::numeric("x", x), Column::categorical("c", c)});
    const Table out = impute_regression(t, 5).table;
    check_fills_only_gaps(t, out);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < 200; i += 10) agree += (out.column("c").label(i) == (x[i] > 0 ? "hi" : "lo"));
    CHECK(agree >= 15);
}

TEST_CASE("cart imputation draws from the reached leaf") {
    // x separates two groups perfectly; the missing y sits in the group where y is always 7.
    const Table t({Column::numeric("x", {0, 0, 0, 0, 0, 0, 10, 10, 10, 10, 10, 10}),
                   Column::numeric("y", {7, 7, 7, 7, 7, NA, 1, 2, 3, 4, 5, 6})});
    const Table out = impute_cart(t, 4, ImputeOptions{TreeParams{30, 1, 2}});
    CHECK(out.column("y").number(5) == 7.0);
}

TEST_CASE("imputers keep observed cells and are deterministic") {
    const Table full = fixtures::random_mixed(150, 3, 2, 4, 8);
    const Table masked = mask_cells(full, 0.1, 3);
    for (auto kind : {ImputerKind::Substitution, ImputerKind::Regression, ImputerKind::Cart}) {
        CAPTURE(to_string(kind));
        const Table a = impute(kind, masked, 11).table;
        check_fills_only_gaps(masked, a);
        CHECK(impute(kind, masked, 11).table == a);
    }
}

TEST_CASE("substitution and cart never leave the observed range") {
    const Table full = load_csv(fixtures::data_path("titanic.csv"));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Table masked = mask_cells(full, 0.1, seed);
        CHECK(count_out_of_range(masked, impute_substitution(masked)) == 0);
        CHECK(count_out_of_range(masked, impute_cart(masked, seed)) == 0);
    }
}

TEST_CASE("out-of-range counting") {
    const Table real({Column::numeric("x", {1, 2, 3}), cat("c", {"a", "b", "a"})});
    CHECK(count_out_of_range(real, real) == 0);
    const Table high({Column::numeric("x", {1, 2, 4}), cat("c", {"a", "b", "a"})});
    CHECK(count_out_of_range(real, high) == 1);
    const Table unseen({Column::numeric("x", {1, 2, 3}), cat("c", {"a", "z", "a"})});
    CHECK(count_out_of_range(real, unseen) == 1);
    const Table gaps({Column::numeric("x", {NA, 2, 3}), cat("c", {"", "b", "a"})});
    CHECK(count_out_of_range(real, gaps) == 0);
    const Table other({Column::numeric("y", {1, 2, 3}), cat("c", {"a", "b", "a"})});
    CHECK_THROWS_AS(count_out_of_range(real, other), SchemaError);
}

TEST_CASE("masking blanks the requested share of cells") {
    const Table full = fixtures::random_mixed(100, 2, 2, 3, 4);
    const Table masked = mask_cells(full, 0.1, 9);
    std::size_t missing = 0;
    for (const auto& c : masked.columns()) missing += c.missing_count();
    CHECK(missing == 40);
    CHECK(mask_cells(full, 0.1, 9) == masked);
    CHECK(mask_cells(full, 0.0, 9) == full);
}

TEST_CASE("model-based imputers need two observed values per column") {
    const Table t({Column::numeric("x", {1, NA, NA}), Column::numeric("y", {1, 2, 3})});
    CHECK_THROWS_AS(impute_cart(t, 1), PreconditionError);
    CHECK_THROWS_AS(impute_regression(t, 1), PreconditionError);
    CHECK(imputer_kind_from_string("ri") == ImputerKind::Regression);
    CHECK_THROWS_AS(imputer_kind_from_string("mice"), ParseError);
}
