#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "synthval/csv.hpp"
#include "synthval/error.hpp"
#include "synthval/generators.hpp"
#include "synthval/metrics.hpp"

using namespace synthval;
using fixtures::cat;

namespace {

// Every synthetic cell value occurs in the same column of the training table.
void check_values_from_train(const Table& train, const Table& synth) {
    require_same_schema(train, synth);
    for (std::size_t c = 0; c < train.n_cols(); ++c) {
        std::set<std::string> seen;
        for (std::size_t r = 0; r < train.n_rows(); ++r) seen.insert(train.column(c).cell_text(r));
        for (std::size_t r = 0; r < synth.n_rows(); ++r) CHECK(seen.count(synth.column(c).cell_text(r)) == 1);
    }
}

}  // namespace

TEST_CASE("bootstrap rows all come from the training table") {
    const Table train = fixtures::random_mixed(60, 2, 1, 3, 1);
    const Table synth = gen_bootstrap(train, 60, 4);
    std::set<std::string> rows;
    for (std::size_t r = 0; r < train.n_rows(); ++r) {
        std::string key;
        for (const auto& c : train.columns()) key += c.cell_text(r) + "|";
        rows.insert(key);
    }
    for (std::size_t r = 0; r < synth.n_rows(); ++r) {
        std::string key;
        for (const auto& c : synth.columns()) key += c.cell_text(r) + "|";
        CHECK(rows.count(key) == 1);
    }
    CHECK(gen_bootstrap(train, 60, 4) == synth);
}

TEST_CASE("generators keep schema and value sets") {
    const Table train = load_csv(fixtures::data_path("titanic.csv"));
    for (auto kind : {GeneratorKind::Bootstrap, GeneratorKind::Independent, GeneratorKind::SequentialCart}) {
        CAPTURE(to_string(kind));
        const Table synth = generate(kind, train, 300, 7);
        CHECK(synth.n_rows() == 300);
        check_values_from_train(train, synth);
        CHECK(generate(kind, train, 300, 7) == synth);
    }
}

TEST_CASE("sequential generator reproduces missing cells") {
    const Table train = load_csv(fixtures::data_path("titanic.csv"));
    const Table synth = gen_sequential_cart(train, train.n_rows(), 2);
    const double share = static_cast<double>(synth.column("Age").missing_count()) / static_cast<double>(synth.n_rows());
    CHECK(share > 0.1);
    CHECK(share < 0.3);
}

TEST_CASE("visit order sorts by distinct count with stable ties") {
    const Table t({Column::numeric("x", {1, 2, 3, 4}), cat("b", {"a", "b", "a", "b"}), Column::numeric("y", {4, 3, 2, 1}),
                   cat("c", {"a", "a", "a", "a"})});
    CHECK(sequential_visit_order(t) == std::vector<std::size_t>{3, 1, 0, 2});
}

TEST_CASE("single-column sequential generation is marginal resampling") {
    const Table t({Column::numeric("x", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10})});
    const Table s = gen_sequential_cart(t, 100, 1);
    check_values_from_train(t, s);
    CHECK(s.n_rows() == 100);
}

TEST_CASE("independent resampling breaks correlation; sequential keeps it") {
    std::size_t seq_wins = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Table train = fixtures::linear_fixture(500, seed);
        const double p_ind = pcd(train, gen_independent(train, 500, seed));
        const double p_seq = pcd(train, gen_sequential_cart(train, 500, seed));
        CHECK(p_ind > 1.0);
        seq_wins += p_seq < p_ind;
        CHECK(hellinger_overall(train, gen_bootstrap(train, 500, seed)) < 0.1);
        CHECK(hellinger_overall(train, gen_independent(train, 500, seed)) < 0.1);
    }
    CHECK(seq_wins >= 18);
}

TEST_CASE("ensembles derive distinct datapoint seeds") {
    const Table train = fixtures::random_mixed(50, 2, 1, 3, 2);
    const auto e = gen_ensemble(GeneratorKind::Bootstrap, train, 5, 3);
    REQUIRE(e.size() == 5);
    CHECK_FALSE(e[0] == e[1]);
    CHECK(e[2] == gen_bootstrap(train, 50, derive_seed(3, {seed_tag::datapoint, 2})));
    CHECK_THROWS_AS(gen_ensemble(GeneratorKind::Bootstrap, train, 0, 3), PreconditionError);
    CHECK(gen_ensemble(GeneratorKind::Bootstrap, train, 1, 3).size() == 1);
}

TEST_CASE("generator preconditions") {
    const Table tiny({Column::numeric("x", {1, 2, 3})});
    CHECK_THROWS_AS(gen_sequential_cart(tiny, 3, 1), PreconditionError);
    CHECK_THROWS_AS(gen_bootstrap(Table{}, 3, 1), PreconditionError);
    CHECK(generator_kind_from_string("seqcart") == GeneratorKind::SequentialCart);
    CHECK_THROWS_AS(generator_kind_from_string("gan"), ParseError);
}
