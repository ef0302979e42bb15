#include "synthval/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "synthval/error.hpp"
#include "synthval/rng.hpp"

namespace synthval {

std::string_view to_string(GeneratorKind kind) {
    switch (kind) {
    case GeneratorKind::Bootstrap: return "bootstrap";
    case GeneratorKind::Independent: return "independent";
    case GeneratorKind::SequentialCart: return "seqcart";
    }
    return "?";
}

GeneratorKind generator_kind_from_string(std::string_view text) {
    if (text == "bootstrap") return GeneratorKind::Bootstrap;
    if (text == "independent") return GeneratorKind::Independent;
    if (text == "seqcart" || text == "sequential_cart" || text == "cart") return GeneratorKind::SequentialCart;
    throw ParseError("unknown generator '" + std::string(text) + "'");
}

namespace {

void require_rows(const Table& train) {
    if (train.n_rows() == 0 || train.n_cols() == 0) throw PreconditionError("generator needs a non-empty training table");
}

}  // namespace

Table gen_bootstrap(const Table& train, std::size_t n_rows, std::uint64_t seed) {
    require_rows(train);
    Rng rng(seed);
    std::vector<std::size_t> rows(n_rows);
    for (auto& r : rows) r = rng.index(train.n_rows());
    return train.take_rows(rows);
}

Table gen_independent(const Table& train, std::size_t n_rows, std::uint64_t seed) {
    require_rows(train);
    std::vector<Column> cols;
    cols.reserve(train.n_cols());
    for (std::size_t c = 0; c < train.n_cols(); ++c) {
        Rng rng(derive_seed(seed, {c}));
        std::vector<std::size_t> rows(n_rows);
        for (auto& r : rows) r = rng.index(train.n_rows());
        cols.push_back(train.column(c).take(rows));
    }
    return Table(std::move(cols));
}

std::vector<std::size_t> sequential_visit_order(const Table& train) {
    std::vector<std::size_t> order(train.n_cols());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> distinct(train.n_cols());
    for (std::size_t c = 0; c < train.n_cols(); ++c) distinct[c] = train.column(c).distinct_count();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distinct[a] < distinct[b]; });
    return order;
}

Table gen_sequential_cart(const Table& train, std::size_t n_rows, std::uint64_t seed, const GeneratorConfig& cfg) {
    require_rows(train);
    if (train.n_rows() < 10) throw PreconditionError("sequential generator needs at least 10 training rows");

    const auto order = sequential_visit_order(train);
    const std::size_t n_cols = order.size();
    const TreeFeatures real = TreeFeatures::from_table(train, order);
    // Synthetic rows in visit order; entries beyond the current step stay NaN
    // and are never read because each tree only splits on earlier features.
    Matrix synth(n_rows, n_cols, std::numeric_limits<double>::quiet_NaN());
    Rng rng(seed);

    auto draw_from_leaf = [&](const CartTree& tree, std::size_t i) {
        const auto& rows = tree.leaf_rows(tree.leaf_of(synth.row(i)));
        return rows[rng.index(rows.size())];
    };

    for (std::size_t i = 0; i < n_rows; ++i) synth(i, 0) = real.values(rng.index(train.n_rows()), 0);

    for (std::size_t step = 1; step < n_cols; ++step) {
        std::vector<std::size_t> predictors(step);
        std::iota(predictors.begin(), predictors.end(), 0);
        const Column& target = train.column(order[step]);
        const std::vector<double> values = real.values.column(step);

        if (target.is_categorical()) {
            const int missing_class = static_cast<int>(target.levels().size());
            std::vector<int> y(train.n_rows());
            for (std::size_t r = 0; r < train.n_rows(); ++r) y[r] = target.is_missing(r) ? missing_class : target.code(r);
            const CartTree tree = CartTree::fit_classification(real, y, missing_class + 1, cfg.cart, {}, predictors);
            for (std::size_t i = 0; i < n_rows; ++i) synth(i, step) = values[draw_from_leaf(tree, i)];
            continue;
        }

        std::vector<std::size_t> observed;
        for (std::size_t r = 0; r < train.n_rows(); ++r) {
            if (!target.is_missing(r)) observed.push_back(r);
        }
        if (observed.empty()) continue;  // fully missing column stays missing
        std::vector<bool> draw_missing(n_rows, false);
        if (observed.size() < train.n_rows()) {
            std::vector<int> indicator(train.n_rows());
            for (std::size_t r = 0; r < train.n_rows(); ++r) indicator[r] = target.is_missing(r) ? 1 : 0;
            const CartTree tree = CartTree::fit_classification(real, indicator, 2, cfg.cart, {}, predictors);
            for (std::size_t i = 0; i < n_rows; ++i) draw_missing[i] = indicator[draw_from_leaf(tree, i)] == 1;
        }
        const CartTree tree = CartTree::fit_regression(real, values, cfg.cart, observed, predictors);
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (!draw_missing[i]) synth(i, step) = values[draw_from_leaf(tree, i)];
        }
    }

    std::vector<Column> cols(train.n_cols());
    for (std::size_t step = 0; step < n_cols; ++step) {
        const Column& src = train.column(order[step]);
        const std::vector<double> values = synth.column(step);
        if (src.is_numeric()) {
            cols[order[step]] = Column::numeric(src.name(), values);
        } else {
            std::vector<int> codes(n_rows);
            for (std::size_t i = 0; i < n_rows; ++i) {
                codes[i] = std::isnan(values[i]) ? Column::kMissingCode : static_cast<int>(values[i]);
            }
            cols[order[step]] = src.with_codes(std::move(codes));
        }
    }
    return Table(std::move(cols));
}

Table generate(GeneratorKind kind, const Table& train, std::size_t n_rows, std::uint64_t seed, const GeneratorConfig& cfg) {
    switch (kind) {
    case GeneratorKind::Bootstrap: return gen_bootstrap(train, n_rows, seed);
    case GeneratorKind::Independent: return gen_independent(train, n_rows, seed);
    case GeneratorKind::SequentialCart: return gen_sequential_cart(train, n_rows, seed, cfg);
    }
    throw UnsupportedError("unknown generator");
}

std::vector<Table> gen_ensemble(GeneratorKind kind, const Table& train, std::size_t m, std::uint64_t seed,
                                const GeneratorConfig& cfg) {
    if (m == 0) throw PreconditionError("ensemble size must be at least 1");
    std::vector<Table> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(generate(kind, train, train.n_rows(), derive_seed(seed, {seed_tag::datapoint, i}), cfg));
    }
    return out;
}

}  // namespace synthval
