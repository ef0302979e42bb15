#include "synthval/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>

#include "synthval/error.hpp"
#include "synthval/models.hpp"
#include "synthval/rng.hpp"

namespace synthval {

std::string_view to_string(ImputerKind kind) {
    switch (kind) {
    case ImputerKind::Substitution: return "si";
    case ImputerKind::Regression: return "ri";
    case ImputerKind::Cart: return "cart";
    }
    return "?";
}

ImputerKind imputer_kind_from_string(std::string_view text) {
    if (text == "si" || text == "substitution") return ImputerKind::Substitution;
    if (text == "ri" || text == "regression") return ImputerKind::Regression;
    if (text == "cart") return ImputerKind::Cart;
    throw ParseError("unknown imputer '" + std::string(text) + "'");
}

namespace {

Column substitute_column(const Column& col) {
    const std::size_t n = col.size();
    if (col.missing_count() == 0) return col;
    if (col.missing_count() == n) throw PreconditionError("column '" + col.name() + "' has no observed value to impute from");
    if (col.is_numeric()) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (!col.is_missing(r)) {
                sum += col.number(r);
                ++count;
            }
        }
        const double mean = sum / static_cast<double>(count);
        std::vector<double> values = col.numbers();
        for (auto& v : values) {
            if (std::isnan(v)) v = mean;
        }
        return col.with_numbers(std::move(values));
    }
    std::vector<std::size_t> counts(col.levels().size(), 0);
    for (int c : col.codes()) {
        if (c != Column::kMissingCode) ++counts[static_cast<std::size_t>(c)];
    }
    // max_element returns the first maximum, i.e. the smallest level.
    const int mode = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    std::vector<int> codes = col.codes();
    for (auto& c : codes) {
        if (c == Column::kMissingCode) c = mode;
    }
    return col.with_codes(std::move(codes));
}

void require_imputable(const Table& t) {
    if (t.n_cols() < 2) throw PreconditionError("model-based imputation needs at least two columns");
    for (const auto& col : t.columns()) {
        if (col.size() - col.missing_count() < 2) {
            throw PreconditionError("column '" + col.name() + "' needs at least two observed values");
        }
    }
}

std::vector<std::size_t> observed_rows(const Column& col) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < col.size(); ++r) {
        if (!col.is_missing(r)) rows.push_back(r);
    }
    return rows;
}

std::vector<std::size_t> missing_rows(const Column& col) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < col.size(); ++r) {
        if (col.is_missing(r)) rows.push_back(r);
    }
    return rows;
}

// Encoded predictors of column `target`: every other column of the
// substituted table, minus columns that are constant on the observed rows.
Matrix predictor_matrix(const Table& filled, std::size_t target, std::span<const std::size_t> fit_rows) {
    const Matrix all = encode_numeric(filled.without_column(filled.column(target).name()));
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < all.cols(); ++c) {
        const double first = all(fit_rows[0], c);
        const bool varies = std::any_of(fit_rows.begin(), fit_rows.end(), [&](std::size_t r) { return all(r, c) != first; });
        if (varies) keep.push_back(c);
    }
    Matrix out(all.rows(), keep.size());
    for (std::size_t r = 0; r < all.rows(); ++r) {
        for (std::size_t k = 0; k < keep.size(); ++k) out(r, k) = all(r, keep[k]);
    }
    return out;
}

// Least-squares fit with intercept; false when the design is rank deficient.
bool impute_numeric_regression(const Column& target, const Matrix& x, Rng& rng, std::vector<double>& values) {
    const auto fit = observed_rows(target);
    const std::size_t p = x.cols() + 1;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(fit.size()), static_cast<Eigen::Index>(p));
    Eigen::VectorXd y(static_cast<Eigen::Index>(fit.size()));
    for (std::size_t i = 0; i < fit.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        design(row, 0) = 1.0;
        for (std::size_t c = 0; c < x.cols(); ++c) design(row, static_cast<Eigen::Index>(c + 1)) = x(fit[i], c);
        y(row) = target.number(fit[i]);
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (static_cast<std::size_t>(qr.rank()) < p) return false;
    const Eigen::VectorXd beta = qr.solve(y);
    const double rss = (design * beta - y).squaredNorm();
    const double sigma = fit.size() > p ? std::sqrt(rss / static_cast<double>(fit.size() - p)) : 0.0;

    for (std::size_t r : missing_rows(target)) {
        double pred = beta(0);
        for (std::size_t c = 0; c < x.cols(); ++c) pred += beta(static_cast<Eigen::Index>(c + 1)) * x(r, c);
        if (sigma > 0.0) pred += sigma * rng.normal();
        values[r] = pred;
    }
    return true;
}

void impute_categorical_regression(const Column& target, const Matrix& x, std::uint64_t seed, Rng& rng,
                                   std::vector<int>& codes) {
    const auto fit = observed_rows(target);
    const auto gaps = missing_rows(target);
    // Standardize with the observed rows' moments.
    Matrix fit_x(fit.size(), x.cols());
    for (std::size_t i = 0; i < fit.size(); ++i) {
        for (std::size_t c = 0; c < x.cols(); ++c) fit_x(i, c) = x(fit[i], c);
    }
    const Standardized z = standardize_columns(fit_x);
    Matrix gap_x(gaps.size(), x.cols());
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            gap_x(i, c) = z.constant[c] ? 0.0 : (x(gaps[i], c) - z.means[c]) / z.stddevs[c];
        }
    }

    const std::size_t n_levels = target.levels().size();
    Matrix prob(gaps.size(), n_levels, 0.0);
    for (std::size_t level = 0; level < n_levels; ++level) {
        std::vector<int> y(fit.size());
        std::size_t hits = 0;
        for (std::size_t i = 0; i < fit.size(); ++i) {
            y[i] = target.code(fit[i]) == static_cast<int>(level) ? 1 : 0;
            hits += static_cast<std::size_t>(y[i]);
        }
        if (hits == 0) continue;
        if (hits == fit.size()) {
            for (std::size_t i = 0; i < gaps.size(); ++i) prob(i, level) = 1.0;
            continue;
        }
        const auto model = train_classifier(z.values, y, FitConfig::defaults(ClassifierKind::Logistic, derive_seed(seed, {level})), 2);
        const Matrix p = model.predict_proba(gap_x);
        for (std::size_t i = 0; i < gaps.size(); ++i) prob(i, level) = p(i, 1);
    }

    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const auto row = prob.row(i);
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        double u = rng.uniform() * total;
        std::size_t pick = n_levels;
        for (std::size_t level = 0; level < n_levels; ++level) {
            if (row[level] <= 0.0) continue;
            pick = level;  // last positive level absorbs rounding
            if (u < row[level]) break;
            u -= row[level];
        }
        codes[gaps[i]] = static_cast<int>(pick);
    }
}

}  // namespace

Table impute_substitution(const Table& t) {
    if (!t.has_missing()) return t;
    std::vector<Column> cols;
    cols.reserve(t.n_cols());
    for (const auto& col : t.columns()) cols.push_back(substitute_column(col));
    return Table(std::move(cols));
}

ImputeResult impute_regression(const Table& t, std::uint64_t seed) {
    if (!t.has_missing()) return {t, {}};
    require_imputable(t);
    const Table filled = impute_substitution(t);
    std::vector<Column> cols = t.columns();
    std::vector<std::string> warnings;
    for (std::size_t j = 0; j < t.n_cols(); ++j) {
        const Column& target = t.column(j);
        if (target.missing_count() == 0) continue;
        const std::uint64_t column_seed = derive_seed(seed, {seed_tag::impute_column, j});
        Rng rng(column_seed);
        const auto fit = observed_rows(target);
        const Matrix x = predictor_matrix(filled, j, fit);
        if (target.is_numeric()) {
            std::vector<double> values = target.numbers();
            if (impute_numeric_regression(target, x, rng, values)) {
                cols[j] = target.with_numbers(std::move(values));
            } else {
                warnings.push_back("column '" + target.name() + "': singular design, substituted");
                cols[j] = filled.column(j);
            }
        } else {
            std::vector<int> codes = target.codes();
            impute_categorical_regression(target, x, column_seed, rng, codes);
            cols[j] = target.with_codes(std::move(codes));
        }
    }
    return {Table(std::move(cols)), std::move(warnings)};
}

Table impute_cart(const Table& t, std::uint64_t seed, const ImputeOptions& options) {
    if (!t.has_missing()) return t;
    require_imputable(t);
    const Table filled = impute_substitution(t);
    std::vector<std::size_t> all(t.n_cols());
    std::iota(all.begin(), all.end(), 0);
    const TreeFeatures features = TreeFeatures::from_table(filled, all);

    std::vector<Column> cols = t.columns();
    for (std::size_t j = 0; j < t.n_cols(); ++j) {
        const Column& target = t.column(j);
        if (target.missing_count() == 0) continue;
        Rng rng(derive_seed(seed, {seed_tag::impute_column, j}));
        std::vector<std::size_t> predictors;
        for (std::size_t c = 0; c < t.n_cols(); ++c) {
            if (c != j) predictors.push_back(c);
        }
        const auto fit = observed_rows(target);
        const auto gaps = missing_rows(target);

        auto draw = [&](const CartTree& tree, std::size_t r) {
            const auto& rows = tree.leaf_rows(tree.leaf_of(features.values.row(r)));
            return rows[rng.index(rows.size())];
        };

        if (target.is_numeric()) {
            const CartTree tree = CartTree::fit_regression(features, target.numbers(), options.cart, fit, predictors);
            std::vector<double> values = target.numbers();
            for (std::size_t r : gaps) values[r] = target.number(draw(tree, r));
            cols[j] = target.with_numbers(std::move(values));
        } else {
            const CartTree tree = CartTree::fit_classification(features, target.codes(),
                                                               static_cast<int>(target.levels().size()), options.cart,
                                                               fit, predictors);
            std::vector<int> codes = target.codes();
            for (std::size_t r : gaps) codes[r] = target.code(draw(tree, r));
            cols[j] = target.with_codes(std::move(codes));
        }
    }
    return Table(std::move(cols));
}

ImputeResult impute(ImputerKind kind, const Table& t, std::uint64_t seed, const ImputeOptions& options) {
    switch (kind) {
    case ImputerKind::Substitution: return {impute_substitution(t), {}};
    case ImputerKind::Regression: return impute_regression(t, seed);
    case ImputerKind::Cart: return {impute_cart(t, seed, options), {}};
    }
    throw UnsupportedError("unknown imputer");
}

std::size_t count_out_of_range(const Table& real, const Table& synth) {
    require_same_schema(real, synth);
    std::size_t count = 0;
    for (std::size_t c = 0; c < real.n_cols(); ++c) {
        const Column& a = real.column(c);
        const Column& b = synth.column(c);
        bool outside = false;
        if (a.is_numeric()) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t r = 0; r < a.size(); ++r) {
                if (a.is_missing(r)) continue;
                lo = std::min(lo, a.number(r));
                hi = std::max(hi, a.number(r));
            }
            for (std::size_t r = 0; r < b.size() && !outside; ++r) {
                if (!b.is_missing(r)) outside = b.number(r) < lo || b.number(r) > hi;
            }
        } else {
            std::set<std::string> seen;
            for (std::size_t r = 0; r < a.size(); ++r) {
                if (!a.is_missing(r)) seen.insert(a.label(r));
            }
            for (std::size_t r = 0; r < b.size() && !outside; ++r) {
                if (!b.is_missing(r)) outside = !seen.contains(b.label(r));
            }
        }
        if (outside) ++count;
    }
    return count;
}

Table mask_cells(const Table& t, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw PreconditionError("mask fraction must lie in [0, 1]");
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            if (!t.column(c).is_missing(r)) cells.emplace_back(c, r);
        }
    }
    const auto wanted = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(t.n_rows() * t.n_cols())));
    const std::size_t k = std::min(wanted, cells.size());
    Rng rng(derive_seed(seed, {seed_tag::mask}));
    // Partial Fisher-Yates: the first k entries are a uniform sample.
    for (std::size_t i = 0; i < k; ++i) std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);

    std::vector<std::vector<std::size_t>> blank(t.n_cols());
    for (std::size_t i = 0; i < k; ++i) blank[cells[i].first].push_back(cells[i].second);
    std::vector<Column> cols = t.columns();
    for (std::size_t c = 0; c < t.n_cols(); ++c) {
        if (blank[c].empty()) continue;
        if (cols[c].is_numeric()) {
            std::vector<double> values = cols[c].numbers();
            for (std::size_t r : blank[c]) values[r] = std::numeric_limits<double>::quiet_NaN();
            cols[c] = cols[c].with_numbers(std::move(values));
        } else {
            std::vector<int> codes = cols[c].codes();
            for (std::size_t r : blank[c]) codes[r] = Column::kMissingCode;
            cols[c] = cols[c].with_codes(std::move(codes));
        }
    }
    return Table(std::move(cols));
}

}  // namespace synthval
