#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "synthval/cart.hpp"
#include "synthval/table.hpp"

namespace synthval {

enum class ImputerKind { Substitution, Regression, Cart };

// "si", "ri", "cart".
std::string_view to_string(ImputerKind kind);
ImputerKind imputer_kind_from_string(std::string_view text);

struct ImputeOptions {
    // Trees of the leaf-sampling imputer.
    TreeParams cart{30, 5, 10};
};

struct ImputeResult {
    Table table;
    // Columns that fell back to substitution because their design matrix was singular.
    std::vector<std::string> warnings;
};

// Mean for numeric columns, mode for categorical ones (ties go to the
// lexicographically smallest category). Throws PreconditionError naming a
// column without any observed cell.
Table impute_substitution(const Table& t);

// Per incomplete column: least squares on all other columns (their own gaps
// filled by substitution, categoricals frequency-encoded) plus Gaussian noise
// with the residual standard deviation. Categorical columns use one-vs-rest
// logistic models and sample from the normalized class probabilities.
// Predictions are not clamped to the observed range.
ImputeResult impute_regression(const Table& t, std::uint64_t seed);

// Per incomplete column: CART on all other columns (gaps filled by
// substitution), fitted on the rows where the column is observed. Each
// missing cell takes a value drawn uniformly from the training values of the
// leaf its row reaches, so imputed values stay inside the observed set.
Table impute_cart(const Table& t, std::uint64_t seed, const ImputeOptions& options = {});

// Column j draws from derive_seed(seed, {impute_column, j}) in every imputer.
ImputeResult impute(ImputerKind kind, const Table& t, std::uint64_t seed, const ImputeOptions& options = {});

// Number of columns of `synth` holding at least one observed value outside
// the observed [min, max] (numeric) or category set (categorical) of the same
// column of `real`. Missing cells are ignored.
std::size_t count_out_of_range(const Table& real, const Table& synth);

// Blanks round(fraction * cells) randomly chosen observed cells.
Table mask_cells(const Table& t, double fraction, std::uint64_t seed);

}  // namespace synthval
