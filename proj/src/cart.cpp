#include "synthval/cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "synthval/error.hpp"

namespace synthval {

TreeFeatures TreeFeatures::all_numeric(Matrix m) {
    TreeFeatures f;
    f.kinds.assign(m.cols(), FeatureKind::Numeric);
    f.values = std::move(m);
    return f;
}

TreeFeatures TreeFeatures::from_table(const Table& t, std::span<const std::size_t> columns) {
    TreeFeatures f;
    f.values = Matrix(t.n_rows(), columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const auto& col = t.column(columns[j]);
        f.kinds.push_back(col.is_numeric() ? FeatureKind::Numeric : FeatureKind::Categorical);
        for (std::size_t r = 0; r < t.n_rows(); ++r) {
            if (col.is_missing(r)) {
                f.values(r, j) = std::numeric_limits<double>::quiet_NaN();
            } else {
                f.values(r, j) = col.is_numeric() ? col.number(r) : static_cast<double>(col.code(r));
            }
        }
    }
    return f;
}

namespace {

// Sufficient statistics of a set of rows: class counts or (sum, sum of squares).
struct Stats {
    double n = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
    std::vector<double> counts;

    explicit Stats(int n_classes = 0) : counts(static_cast<std::size_t>(n_classes), 0.0) {}

    void clear() {
        n = sum = sumsq = 0.0;
        std::fill(counts.begin(), counts.end(), 0.0);
    }
};

// Impurity of (a + plus - minus); Gini scaled by n for classification, SSE for regression.
double impurity(const Stats& a, const Stats* plus = nullptr, const Stats* minus = nullptr) {
    double n = a.n + (plus ? plus->n : 0.0) - (minus ? minus->n : 0.0);
    if (n <= 0.0) return 0.0;
    if (!a.counts.empty()) {
        double sq = 0.0;
        for (std::size_t c = 0; c < a.counts.size(); ++c) {
            const double v = a.counts[c] + (plus ? plus->counts[c] : 0.0) - (minus ? minus->counts[c] : 0.0);
            sq += v * v;
        }
        return n - sq / n;
    }
    const double sum = a.sum + (plus ? plus->sum : 0.0) - (minus ? minus->sum : 0.0);
    const double sumsq = a.sumsq + (plus ? plus->sumsq : 0.0) - (minus ? minus->sumsq : 0.0);
    return std::max(0.0, sumsq - sum * sum / n);
}

struct Candidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    std::vector<signed char> routes;
    bool missing_left = false;
    bool has_missing = false;
    double left_n = 0.0;
    double right_n = 0.0;
};

}  // namespace

class CartBuilder {
public:
    CartBuilder(const TreeFeatures& x, std::span<const int> yc, std::span<const double> yr, int n_classes,
                const TreeParams& params, std::span<const std::size_t> features)
        : x_(x), yc_(yc), yr_(yr), n_classes_(n_classes), params_(params) {
        if (features.empty()) {
            features_.resize(x.values.cols());
            std::iota(features_.begin(), features_.end(), 0);
        } else {
            features_.assign(features.begin(), features.end());
        }
    }

    CartTree build(std::vector<std::size_t> rows) {
        tree_.n_classes_ = n_classes_;
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    void add(Stats& s, std::size_t row) const {
        s.n += 1.0;
        if (n_classes_ > 0) {
            s.counts[static_cast<std::size_t>(yc_[row])] += 1.0;
        } else {
            const double v = yr_[row];
            s.sum += v;
            s.sumsq += v * v;
        }
    }

    bool is_pure(std::span<const std::size_t> rows, const Stats& s) const {
        if (n_classes_ > 0) {
            return std::any_of(s.counts.begin(), s.counts.end(), [&](double c) { return c == s.n; });
        }
        const double first = yr_[rows.front()];
        return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return yr_[r] == first; });
    }

    bool admissible(double left_n, double right_n) const {
        const auto min_leaf = static_cast<double>(std::max<std::size_t>(params_.min_leaf, 1));
        return left_n >= min_leaf && right_n >= min_leaf;
    }

    void consider(Candidate& best, double gain, Candidate&& c) const {
        if (gain > best.gain) {
            c.gain = gain;
            best = std::move(c);
        }
    }

    void search_numeric(std::size_t f, std::span<const std::size_t> rows, double parent, Candidate& best) const {
        std::vector<std::pair<double, std::size_t>> present;
        present.reserve(rows.size());
        Stats missing(n_classes_);
        Stats total(n_classes_);
        for (std::size_t r : rows) {
            const double v = x_.values(r, f);
            if (std::isnan(v)) {
                add(missing, r);
            } else {
                present.emplace_back(v, r);
                add(total, r);
            }
        }
        if (present.size() < 2) return;
        std::stable_sort(present.begin(), present.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Stats left(n_classes_);
        const bool has_missing = missing.n > 0.0;
        for (std::size_t i = 0; i + 1 < present.size(); ++i) {
            add(left, present[i].second);
            if (present[i].first == present[i + 1].first) continue;
            const double lo = present[i].first;
            const double hi = present[i + 1].first;
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;
            const double right_n = total.n - left.n;
            // missing rows on the right
            if (admissible(left.n, right_n + missing.n)) {
                const double gain = parent - impurity(left) - impurity(total, &missing, &left);
                if (gain > best.gain) {
                    Candidate c;
                    c.feature = static_cast<int>(f);
                    c.threshold = threshold;
                    c.has_missing = has_missing;
                    c.missing_left = false;
                    c.left_n = left.n;
                    c.right_n = right_n + missing.n;
                    consider(best, gain, std::move(c));
                }
            }
            if (has_missing && admissible(left.n + missing.n, right_n)) {
                const double gain = parent - impurity(left, &missing) - impurity(total, nullptr, &left);
                if (gain > best.gain) {
                    Candidate c;
                    c.feature = static_cast<int>(f);
                    c.threshold = threshold;
                    c.has_missing = true;
                    c.missing_left = true;
                    c.left_n = left.n + missing.n;
                    c.right_n = right_n;
                    consider(best, gain, std::move(c));
                }
            }
        }
    }

    void search_categorical(std::size_t f, std::span<const std::size_t> rows, double parent, const Stats& node,
                            Candidate& best) const {
        // Group -1 collects missing cells and takes part in the ordering like a level.
        std::map<int, Stats> groups;
        int max_code = -1;
        for (std::size_t r : rows) {
            const double v = x_.values(r, f);
            const int code = std::isnan(v) ? -1 : static_cast<int>(v);
            auto it = groups.try_emplace(code, n_classes_).first;
            add(it->second, r);
            max_code = std::max(max_code, code);
        }
        if (groups.size() < 2) return;

        std::size_t focus = 1;
        if (n_classes_ > 2) {
            focus = static_cast<std::size_t>(std::max_element(node.counts.begin(), node.counts.end()) - node.counts.begin());
        }
        std::vector<std::pair<double, int>> order;
        order.reserve(groups.size());
        for (const auto& [code, s] : groups) {
            const double key = n_classes_ > 0 ? s.counts[focus] / s.n : s.sum / s.n;
            order.emplace_back(key, code);
        }
        std::sort(order.begin(), order.end());

        Stats left(n_classes_);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const Stats& g = groups.at(order[i].second);
            left.n += g.n;
            left.sum += g.sum;
            left.sumsq += g.sumsq;
            for (std::size_t c = 0; c < left.counts.size(); ++c) left.counts[c] += g.counts[c];
            const double right_n = node.n - left.n;
            if (!admissible(left.n, right_n)) continue;
            const double gain = parent - impurity(left) - impurity(node, nullptr, &left);
            if (gain > best.gain) {
                Candidate c;
                c.feature = static_cast<int>(f);
                c.routes.assign(static_cast<std::size_t>(max_code + 1), 0);
                for (std::size_t j = 0; j < order.size(); ++j) {
                    const int code = order[j].second;
                    if (code < 0) {
                        c.has_missing = true;
                        c.missing_left = j <= i;
                    } else {
                        c.routes[static_cast<std::size_t>(code)] = j <= i ? 1 : 2;
                    }
                }
                c.left_n = left.n;
                c.right_n = right_n;
                consider(best, gain, std::move(c));
            }
        }
    }

    int make_leaf(std::vector<std::size_t> rows, const Stats& s) {
        CartTree::Leaf leaf;
        std::sort(rows.begin(), rows.end());
        leaf.rows = std::move(rows);
        if (n_classes_ > 0) {
            leaf.distribution.resize(s.counts.size());
            for (std::size_t c = 0; c < s.counts.size(); ++c) leaf.distribution[c] = s.counts[c] / s.n;
        } else {
            leaf.mean = s.sum / s.n;
        }
        tree_.leaves_.push_back(std::move(leaf));
        CartTree::Node node;
        node.leaf = static_cast<int>(tree_.leaves_.size() - 1);
        tree_.nodes_.push_back(std::move(node));
        return static_cast<int>(tree_.nodes_.size() - 1);
    }

    bool goes_left(const CartTree::Node& node, std::size_t row) const {
        const double v = x_.values(row, static_cast<std::size_t>(node.feature));
        if (std::isnan(v)) return node.missing_left;
        if (node.routes.empty()) return v <= node.threshold;
        const auto code = static_cast<std::size_t>(v);
        return node.routes[code] == 1;
    }

    int grow(std::vector<std::size_t> rows, int depth) {
        tree_.depth_ = std::max(tree_.depth_, depth);
        Stats node(n_classes_);
        for (std::size_t r : rows) add(node, r);

        const bool stop = depth >= params_.max_depth || rows.size() < std::max<std::size_t>(params_.min_split, 2) ||
                          rows.size() < 2 * std::max<std::size_t>(params_.min_leaf, 1) || is_pure(rows, node);
        if (stop) return make_leaf(std::move(rows), node);

        const double parent = impurity(node);
        Candidate best;
        // Impure nodes split even without an impurity decrease, which lets
        // a second level resolve interactions such as XOR.
        best.gain = -std::numeric_limits<double>::infinity();
        for (std::size_t f : features_) {
            if (x_.kinds[f] == FeatureKind::Numeric) {
                search_numeric(f, rows, parent, best);
            } else {
                search_categorical(f, rows, parent, node, best);
            }
        }
        if (best.feature < 0) return make_leaf(std::move(rows), node);

        CartTree::Node split;
        split.feature = best.feature;
        split.threshold = best.threshold;
        split.routes = std::move(best.routes);
        split.missing_left = best.has_missing ? best.missing_left : best.left_n >= best.right_n;
        split.fallback_left = best.left_n >= best.right_n;

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t r : rows) (goes_left(split, r) ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int index = static_cast<int>(tree_.nodes_.size());
        tree_.nodes_.push_back(std::move(split));
        const int left = grow(std::move(left_rows), depth + 1);
        const int right = grow(std::move(right_rows), depth + 1);
        tree_.nodes_[static_cast<std::size_t>(index)].left = left;
        tree_.nodes_[static_cast<std::size_t>(index)].right = right;
        return index;
    }

    const TreeFeatures& x_;
    std::span<const int> yc_;
    std::span<const double> yr_;
    int n_classes_;
    TreeParams params_;
    std::vector<std::size_t> features_;
    CartTree tree_;
};

namespace {

std::vector<std::size_t> resolve_rows(std::span<const std::size_t> rows, std::size_t n) {
    if (!rows.empty()) return {rows.begin(), rows.end()};
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

void check_features(const TreeFeatures& x) {
    if (x.kinds.size() != x.values.cols()) throw PreconditionError("tree feature kinds do not match the matrix width");
}

}  // namespace

CartTree CartTree::fit_classification(const TreeFeatures& x, std::span<const int> y, int n_classes,
                                      const TreeParams& params, std::span<const std::size_t> rows,
                                      std::span<const std::size_t> features) {
    check_features(x);
    if (y.size() != x.values.rows()) throw PreconditionError("label count does not match feature rows");
    if (n_classes < 1) throw PreconditionError("classification tree needs at least one class");
    auto idx = resolve_rows(rows, x.values.rows());
    if (idx.empty()) throw PreconditionError("cannot fit a tree on zero rows");
    for (std::size_t r : idx) {
        if (y[r] < 0 || y[r] >= n_classes) throw PreconditionError("class label out of range");
    }
    CartBuilder builder(x, y, {}, n_classes, params, features);
    return builder.build(std::move(idx));
}

CartTree CartTree::fit_regression(const TreeFeatures& x, std::span<const double> y, const TreeParams& params,
                                  std::span<const std::size_t> rows, std::span<const std::size_t> features) {
    check_features(x);
    if (y.size() != x.values.rows()) throw PreconditionError("target count does not match feature rows");
    auto idx = resolve_rows(rows, x.values.rows());
    if (idx.empty()) throw PreconditionError("cannot fit a tree on zero rows");
    for (std::size_t r : idx) {
        if (!std::isfinite(y[r])) throw PreconditionError("regression target must be finite");
    }
    CartBuilder builder(x, {}, y, 0, params, features);
    return builder.build(std::move(idx));
}

std::size_t CartTree::leaf_of(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const Node& node = nodes_[i];
        const double v = x[static_cast<std::size_t>(node.feature)];
        bool left;
        if (std::isnan(v)) {
            left = node.missing_left;
        } else if (node.routes.empty()) {
            left = v <= node.threshold;
        } else {
            const auto code = static_cast<long long>(v);
            const signed char route =
                code >= 0 && static_cast<std::size_t>(code) < node.routes.size() ? node.routes[static_cast<std::size_t>(code)] : 0;
            left = route == 0 ? node.fallback_left : route == 1;
        }
        i = static_cast<std::size_t>(left ? node.left : node.right);
    }
    return static_cast<std::size_t>(nodes_[i].leaf);
}

}  // namespace synthval
