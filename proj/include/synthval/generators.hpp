#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "synthval/cart.hpp"
#include "synthval/table.hpp"

namespace synthval {

enum class GeneratorKind { Bootstrap, Independent, SequentialCart };

// "bootstrap", "independent", "seqcart".
std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view text);

struct GeneratorConfig {
    // Conditional trees of the sequential generator.
    TreeParams cart{30, 5, 10};
};

// Rows drawn with replacement from `train`.
Table gen_bootstrap(const Table& train, std::size_t n_rows, std::uint64_t seed);

// Every column resampled independently from its own values, which keeps the
// marginals and breaks the joint structure.
Table gen_independent(const Table& train, std::size_t n_rows, std::uint64_t seed);

// Column visit order of the sequential generator: ascending distinct-value
// count, ties in original column order.
std::vector<std::size_t> sequential_visit_order(const Table& train);

// Sequential conditional synthesis. The first visited column is resampled
// from its marginal. Each later column gets a CART fitted on the real
// training table with the already-visited columns as predictors; the
// synthetic prefix of every row is routed through that tree and the new value
// is drawn uniformly from the training values at the reached leaf. Missing
// cells are synthesized like values: categorical targets treat them as one
// more class, numeric targets first draw a missing indicator from its own tree.
Table gen_sequential_cart(const Table& train, std::size_t n_rows, std::uint64_t seed, const GeneratorConfig& cfg = {});

Table generate(GeneratorKind kind, const Table& train, std::size_t n_rows, std::uint64_t seed,
               const GeneratorConfig& cfg = {});

// m synthetic tables of |train| rows; datapoint i uses derive_seed(seed, {datapoint, i}).
std::vector<Table> gen_ensemble(GeneratorKind kind, const Table& train, std::size_t m, std::uint64_t seed,
                                const GeneratorConfig& cfg = {});

}  // namespace synthval
